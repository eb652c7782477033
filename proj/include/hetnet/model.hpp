#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "hetnet/types.hpp"

namespace hetnet
{

/// Binary on/off pattern, one entry per BS.
using Activation = std::vector<int>;

Activation all_ones(int L);
Activation all_zeros(int L);
/// Bit l of mask becomes a[l].
Activation activation_from_mask(std::uint64_t mask, int L);
std::uint64_t activation_mask(const Activation& a);
/// "1011..." with a[0] first.
std::string bitstring(const Activation& a);
bool is_binary(const Activation& a);

struct NetworkInstance
{
    int L = 0;
    int K = 0;
    std::vector<int> N;
    std::vector<std::vector<CVecXd>> h; // h[l][k], length N[l]
    VecXd gamma;
    VecXd sigma2;
    VecXd P;
    VecXd pi;
    std::vector<int> cell_of_bs;
    std::vector<int> cell_of_user;

    /// Throws std::invalid_argument on inconsistent data.
    void validate() const;

    int total_antennas() const;
    /// Offset of BS l's block inside a stacked beamformer.
    int antenna_offset(int l) const;
    /// h_k stacked over all BSs.
    CVecXd stacked_channel(int k) const;
    /// BS l may serve user k (same cell).
    bool serves(int l, int k) const { return cell_of_bs[l] == cell_of_user[k]; }
    int num_cells() const;
};

struct BeamformingSolution
{
    CMatXd w; // column k is user k's stacked beamformer
    VecXd tx_power;
    double objective = 0;
    Activation activation;
};

/// Recomputes tx_power and objective from w and activation.
void finalize(const NetworkInstance& inst, BeamformingSolution& sol);

double eval_sinr(const NetworkInstance& inst, const BeamformingSolution& sol, int k);
double total_power(const NetworkInstance& inst, const BeamformingSolution& sol);
/// Smallest SINR_k / gamma_k - 1 over users (negative when a target is missed).
double min_sinr_slack(const NetworkInstance& inst, const BeamformingSolution& sol);
/// Largest tx_power[l] - a_l P_l, relative to P_l.
double max_cap_violation(const NetworkInstance& inst, const BeamformingSolution& sol);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);

struct PowerModel
{
    double P_act = 6.8;
    double P_slp = 4.3;
    double eta = 0.25;
    double P_max_dBm = 43.0;

    double pi() const { return (P_act - P_slp) * eta; }
    void validate() const;
};

struct HexnetParams
{
    int num_bs = 7; // first num_bs of the 7 hexagonal sites
    int antennas = 2;
    int cells = 1;
    double cell_radius_km = 1.0;
    double pathloss_db_at_1km = 148.1;
    double pathloss_slope_db = 37.6;
    double antenna_gain_dbi = 9.0;
    double shadow_std_db = 8.0;
    double min_distance_km = 0.01;
    double noise_dbm = -143.0;
    double sinr_db = 5.0;
    PowerModel power;

    void validate() const;
};

/// Path loss in dB at distance d (km), clamped to the minimum distance.
double pathloss_db(const HexnetParams& params, double d_km);

/// Site positions (km) of the 7-cell layout, centre first.
std::vector<std::pair<double, double>> hex_sites(double radius_km);

NetworkInstance generate_hexnet(std::uint64_t seed, int K, const HexnetParams& params = {});

/// mt19937_64 with the distribution transforms written out, so draws are the
/// same under every standard library.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();    // [0, 1), 53 bits
    double gaussian();   // N(0, 1), Box-Muller
    Complex cgaussian(); // CN(0, 1)
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0;
};

std::string to_json(const NetworkInstance& inst);
NetworkInstance instance_from_json(const std::string& text);
void write_instance(const std::string& path, const NetworkInstance& inst);
NetworkInstance read_instance(const std::string& path);

} // namespace hetnet
