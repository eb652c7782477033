#pragma once

// Primal-dual interior-point method for ConeProgram, built on the homogeneous
// self-dual embedding with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector. Dense linear algebra throughout: the programs produced
// by this library have at most a few thousand cone rows.
//
// On success the solver returns (x, s, y, z) with
//     G x + s = h,  A x = b,  G'z + A'y + c = 0,  s'z ~ 0.
// When the primal is infeasible it returns a ray (y, z) with z in K,
// G'z + A'y = 0 and h'z + b'y = -1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "hetnet/cone_program.hpp"

namespace hetnet::conic
{

enum class ConeStatus
{
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalError,
};

const char* to_string(ConeStatus status);

template <typename Scalar>
struct SolverSettings
{
    Scalar reltol = 1e-8;
    Scalar abstol = 1e-10;
    Scalar feastol = 1e-9;
    int max_iters = 100;
    Scalar step_fraction = 0.99;
    /// A stalled run whose residuals are within this factor of the targets is
    /// still reported as Optimal.
    Scalar stall_factor = 1e3;
    /// Newton systems with at most this many rows (variables + equalities +
    /// cone rows) are solved in augmented form, larger ones through the
    /// normal equations.
    int augmented_limit = 2500;
};

template <typename Scalar>
struct ConeSolution
{
    ConeStatus status = ConeStatus::NumericalError;
    Vec<Scalar> x, s, y, z;
    Scalar primal_objective = std::numeric_limits<Scalar>::quiet_NaN();
    Scalar dual_objective = std::numeric_limits<Scalar>::quiet_NaN();
    Scalar primal_residual = 0;
    Scalar dual_residual = 0;
    Scalar gap = 0;
    int iterations = 0;
};

// ---------------------------------------------------------------------------
// Cone algebra. Vectors are laid out per ConeDims; PSD blocks use svec.

namespace detail
{

template <typename Scalar>
Mat<Scalar> smat(const Eigen::Ref<const Vec<Scalar>>& v, int order)
{
    const Scalar inv_r2 = Scalar(1) / std::sqrt(Scalar(2));
    Mat<Scalar> S(order, order);
    for (int j = 0; j < order; ++j)
        for (int i = j; i < order; ++i)
        {
            const Scalar val = v(svec_index(order, i, j));
            if (i == j)
                S(i, i) = val;
            else
                S(i, j) = S(j, i) = val * inv_r2;
        }
    return S;
}

template <typename Scalar>
void svec(const Mat<Scalar>& S, Eigen::Ref<Vec<Scalar>> out)
{
    const int order = static_cast<int>(S.rows());
    const Scalar r2 = std::sqrt(Scalar(2));
    for (int j = 0; j < order; ++j)
        for (int i = j; i < order; ++i)
            out(svec_index(order, i, j)) = i == j ? S(i, i) : Scalar(0.5) * r2 * (S(i, j) + S(j, i));
}

} // namespace detail

/// Identity element of K.
template <typename Scalar>
Vec<Scalar> cone_identity(const ConeDims& dims)
{
    Vec<Scalar> e = Vec<Scalar>::Zero(dims.rows());
    e.head(dims.lp).setOnes();
    int off = dims.lp;
    for (int q : dims.soc)
    {
        e(off) = 1;
        off += q;
    }
    for (int n : dims.psd)
    {
        for (int i = 0; i < n; ++i)
            e(off + svec_index(n, i, i)) = 1;
        off += svec_size(n);
    }
    return e;
}

/// Smallest "eigenvalue" of u with respect to K (negative when u is outside).
template <typename Scalar>
Scalar cone_min_eig(const Vec<Scalar>& u, const ConeDims& dims)
{
    Scalar result = std::numeric_limits<Scalar>::infinity();
    if (dims.lp > 0)
        result = u.head(dims.lp).minCoeff();
    int off = dims.lp;
    for (int q : dims.soc)
    {
        result = std::min(result, u(off) - u.segment(off + 1, q - 1).norm());
        off += q;
    }
    for (int n : dims.psd)
    {
        Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(detail::smat<Scalar>(u.segment(off, svec_size(n)), n),
                                                      Eigen::EigenvaluesOnly);
        result = std::min(result, es.eigenvalues()(0));
        off += svec_size(n);
    }
    return result;
}

/// Jordan product u o v.
template <typename Scalar>
Vec<Scalar> jordan(const Vec<Scalar>& u, const Vec<Scalar>& v, const ConeDims& dims)
{
    Vec<Scalar> out(u.size());
    out.head(dims.lp) = u.head(dims.lp).cwiseProduct(v.head(dims.lp));
    int off = dims.lp;
    for (int q : dims.soc)
    {
        out(off) = u.segment(off, q).dot(v.segment(off, q));
        out.segment(off + 1, q - 1) = u(off) * v.segment(off + 1, q - 1) + v(off) * u.segment(off + 1, q - 1);
        off += q;
    }
    for (int n : dims.psd)
    {
        const int len = svec_size(n);
        const Mat<Scalar> U = detail::smat<Scalar>(u.segment(off, len), n);
        const Mat<Scalar> V = detail::smat<Scalar>(v.segment(off, len), n);
        const Mat<Scalar> P = Scalar(0.5) * (U * V + V * U);
        detail::svec<Scalar>(P, out.segment(off, len));
        off += len;
    }
    return out;
}

/// Solves lambda o x = r for x. PSD blocks of lambda must be diagonal, which
/// holds for the scaled point produced by NtScaling.
template <typename Scalar>
Vec<Scalar> jordan_solve(const Vec<Scalar>& lambda, const Vec<Scalar>& r, const ConeDims& dims)
{
    Vec<Scalar> x(r.size());
    x.head(dims.lp) = r.head(dims.lp).cwiseQuotient(lambda.head(dims.lp));
    int off = dims.lp;
    for (int q : dims.soc)
    {
        const Scalar l0 = lambda(off);
        const auto l1 = lambda.segment(off + 1, q - 1);
        const auto r1 = r.segment(off + 1, q - 1);
        const Scalar det = (l0 - l1.norm()) * (l0 + l1.norm());
        const Scalar x0 = (l0 * r(off) - l1.dot(r1)) / det;
        x(off) = x0;
        x.segment(off + 1, q - 1) = (r1 - x0 * l1) / l0;
        off += q;
    }
    for (int n : dims.psd)
    {
        for (int j = 0; j < n; ++j)
            for (int i = j; i < n; ++i)
            {
                const int idx = off + svec_index(n, i, j);
                const Scalar li = lambda(off + svec_index(n, i, i));
                const Scalar lj = lambda(off + svec_index(n, j, j));
                x(idx) = Scalar(2) * r(idx) / (li + lj);
            }
        off += svec_size(n);
    }
    return x;
}

/// Largest alpha (possibly +inf) with u + alpha du in K, for u in the interior.
template <typename Scalar>
Scalar cone_max_step(const Vec<Scalar>& u, const Vec<Scalar>& du, const ConeDims& dims)
{
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    Scalar alpha = inf;
    for (int i = 0; i < dims.lp; ++i)
        if (du(i) < 0)
            alpha = std::min(alpha, -u(i) / du(i));
    int off = dims.lp;
    for (int q : dims.soc)
    {
        const Scalar u0 = u(off), du0 = du(off);
        const auto u1 = u.segment(off + 1, q - 1);
        const auto du1 = du.segment(off + 1, q - 1);
        const Scalar nu1 = u1.norm();
        // q(a) = a2 a^2 + a1 a + a0, a0 > 0; first positive root is the boundary.
        const Scalar a2 = du0 * du0 - du1.squaredNorm();
        const Scalar a1 = Scalar(2) * (u0 * du0 - u1.dot(du1));
        const Scalar a0 = (u0 - nu1) * (u0 + nu1);
        Scalar root = inf;
        if (std::abs(a2) <= std::numeric_limits<Scalar>::epsilon() * (std::abs(a1) + a0))
        {
            if (a1 < 0)
                root = -a0 / a1;
        }
        else
        {
            const Scalar disc = a1 * a1 - Scalar(4) * a2 * a0;
            if (disc >= 0)
            {
                const Scalar sq = std::sqrt(disc);
                const Scalar t = Scalar(-0.5) * (a1 + (a1 >= 0 ? sq : -sq));
                for (Scalar r : {t / a2, t != 0 ? a0 / t : inf})
                    if (r > 0)
                        root = std::min(root, r);
            }
        }
        alpha = std::min(alpha, root);
        off += q;
    }
    for (int n : dims.psd)
    {
        const int len = svec_size(n);
        const Mat<Scalar> U = detail::smat<Scalar>(u.segment(off, len), n);
        const Mat<Scalar> dU = detail::smat<Scalar>(du.segment(off, len), n);
        Eigen::LLT<Mat<Scalar>> llt(U);
        if (llt.info() != Eigen::Success)
            return 0;
        const Mat<Scalar> Linv_dU = llt.matrixL().solve(dU);
        const Mat<Scalar> M = llt.matrixL().solve(Linv_dU.transpose());
        Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(Scalar(0.5) * (M + M.transpose()), Eigen::EigenvaluesOnly);
        const Scalar lmin = es.eigenvalues()(0);
        if (lmin < 0)
            alpha = std::min(alpha, Scalar(-1) / lmin);
        off += len;
    }
    return alpha;
}

/// Nesterov-Todd scaling W for a pair (s, z) in int K:  W z = W^{-T} s = lambda.
template <typename Scalar>
class NtScaling
{
public:
    NtScaling(const Vec<Scalar>& s, const Vec<Scalar>& z, const ConeDims& dims) : dims_(dims)
    {
        ok_ = true;
        lambda_ = Vec<Scalar>::Zero(s.size());
        lp_w_ = (s.head(dims.lp).cwiseQuotient(z.head(dims.lp))).cwiseSqrt();
        lambda_.head(dims.lp) = (s.head(dims.lp).cwiseProduct(z.head(dims.lp))).cwiseSqrt();

        int off = dims.lp;
        for (int q : dims.soc)
        {
            const auto sk = s.segment(off, q);
            const auto zk = z.segment(off, q);
            const Scalar sres = (sk(0) - sk.tail(q - 1).norm()) * (sk(0) + sk.tail(q - 1).norm());
            const Scalar zres = (zk(0) - zk.tail(q - 1).norm()) * (zk(0) + zk.tail(q - 1).norm());
            if (!(sres > 0 && zres > 0))
            {
                ok_ = false;
                return;
            }
            const Scalar snrm = std::sqrt(sres), znrm = std::sqrt(zres);
            const Vec<Scalar> sbar = sk / snrm;
            const Vec<Scalar> zbar = zk / znrm;
            const Scalar gamma = std::sqrt((Scalar(1) + sbar.dot(zbar)) / Scalar(2));
            Vec<Scalar> wbar(q);
            wbar(0) = (sbar(0) + zbar(0)) / (Scalar(2) * gamma);
            wbar.tail(q - 1) = (sbar.tail(q - 1) - zbar.tail(q - 1)) / (Scalar(2) * gamma);
            Vec<Scalar> v = wbar;
            v(0) += 1;
            v /= std::sqrt(Scalar(2) * (wbar(0) + Scalar(1)));
            soc_beta_.push_back(std::sqrt(snrm / znrm));
            soc_v_.push_back(v);
            off += q;
        }
        // lambda = W z for SOC blocks
        off = dims.lp;
        for (std::size_t k = 0; k < dims.soc.size(); ++k)
        {
            const int q = dims.soc[k];
            lambda_.segment(off, q) = apply_soc(k, z.segment(off, q), Mode::W);
            off += q;
        }
        for (int n : dims.psd)
        {
            const int len = svec_size(n);
            Eigen::LLT<Mat<Scalar>> ls(detail::smat<Scalar>(s.segment(off, len), n));
            Eigen::LLT<Mat<Scalar>> lz(detail::smat<Scalar>(z.segment(off, len), n));
            if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
            {
                ok_ = false;
                return;
            }
            const Mat<Scalar> Ls = ls.matrixL();
            const Mat<Scalar> Lz = lz.matrixL();
            Eigen::JacobiSVD<Mat<Scalar>> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const Vec<Scalar> sv = svd.singularValues();
            if (!(sv.minCoeff() > 0))
            {
                ok_ = false;
                return;
            }
            const Mat<Scalar> R = Ls * svd.matrixV() * sv.cwiseSqrt().cwiseInverse().asDiagonal();
            // R^{-1} = Lambda^{1/2} V' Ls^{-1} = Lambda^{-1/2} U' Lz'
            const Mat<Scalar> Rinv = sv.cwiseSqrt().cwiseInverse().asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
            psd_R_.push_back(R);
            psd_Rinv_.push_back(Rinv);
            for (int i = 0; i < n; ++i)
                lambda_(off + svec_index(n, i, i)) = sv(i);
            off += len;
        }
    }

    bool ok() const { return ok_; }
    const Vec<Scalar>& lambda() const { return lambda_; }

    enum class Mode
    {
        W,
        WInv,
        WT,
        WInvT,
    };

    /// Applies the selected operator to every column of X (rows laid out per dims).
    void apply(Mode mode, Eigen::Ref<Mat<Scalar>> X) const
    {
        for (Eigen::Index col = 0; col < X.cols(); ++col)
        {
            Vec<Scalar> tmp = X.col(col);
            X.col(col) = apply(mode, tmp);
        }
    }

    Vec<Scalar> apply(Mode mode, const Vec<Scalar>& u) const
    {
        Vec<Scalar> out(u.size());
        const bool inverse = mode == Mode::WInv || mode == Mode::WInvT;
        if (inverse)
            out.head(dims_.lp) = u.head(dims_.lp).cwiseQuotient(lp_w_);
        else
            out.head(dims_.lp) = u.head(dims_.lp).cwiseProduct(lp_w_);
        int off = dims_.lp;
        for (std::size_t k = 0; k < dims_.soc.size(); ++k)
        {
            const int q = dims_.soc[k];
            out.segment(off, q) = apply_soc(k, u.segment(off, q), mode);
            off += q;
        }
        for (std::size_t k = 0; k < dims_.psd.size(); ++k)
        {
            const int len = svec_size(dims_.psd[k]);
            out.segment(off, len) = apply_psd(k, u.segment(off, len), mode);
            off += len;
        }
        return out;
    }

    enum class BlockKind
    {
        Lp,
        Soc,
        Psd,
    };

    /// Applies the operator of a single cone block to every column of X, whose
    /// rows are that block's rows.
    Mat<Scalar> apply_block(Mode mode, BlockKind kind, int index, int offset, const Mat<Scalar>& X) const
    {
        Mat<Scalar> out(X.rows(), X.cols());
        const bool inverse = mode == Mode::WInv || mode == Mode::WInvT;
        switch (kind)
        {
        case BlockKind::Lp:
        {
            const Vec<Scalar> d = inverse ? lp_w_.cwiseInverse() : lp_w_;
            out = d.segment(offset, X.rows()).asDiagonal() * X;
            break;
        }
        case BlockKind::Soc:
            for (Eigen::Index col = 0; col < X.cols(); ++col)
                out.col(col) = apply_soc(index, X.col(col), mode);
            break;
        case BlockKind::Psd:
            for (Eigen::Index col = 0; col < X.cols(); ++col)
                out.col(col) = apply_psd(index, X.col(col), mode);
            break;
        }
        return out;
    }

private:
    Vec<Scalar> apply_psd(std::size_t k, const Vec<Scalar>& u, Mode mode) const
    {
        const int n = dims_.psd[k];
        const Mat<Scalar> U = detail::smat<Scalar>(u, n);
        const Mat<Scalar>& R = psd_R_[k];
        const Mat<Scalar>& Ri = psd_Rinv_[k];
        Mat<Scalar> V;
        switch (mode)
        {
        case Mode::W: V = R.transpose() * U * R; break;
        case Mode::WT: V = R * U * R.transpose(); break;
        case Mode::WInv: V = Ri.transpose() * U * Ri; break;
        case Mode::WInvT: V = Ri * U * Ri.transpose(); break;
        }
        Vec<Scalar> out(u.size());
        detail::svec<Scalar>(V, out);
        return out;
    }

    Vec<Scalar> apply_soc(std::size_t k, const Vec<Scalar>& u, Mode mode) const
    {
        // W = beta (2 v v' - J),  W^{-1} = (1/beta) (2 Jv (Jv)' - J); both symmetric.
        const Vec<Scalar>& v = soc_v_[k];
        const Scalar beta = soc_beta_[k];
        Vec<Scalar> Ju = -u;
        Ju(0) = u(0);
        if (mode == Mode::W || mode == Mode::WT)
            return beta * (Scalar(2) * v.dot(u) * v - Ju);
        Vec<Scalar> Jv = -v;
        Jv(0) = v(0);
        return (Scalar(2) * Jv.dot(u) * Jv - Ju) / beta;
    }

    ConeDims dims_;
    bool ok_ = false;
    Vec<Scalar> lambda_;
    Vec<Scalar> lp_w_;
    std::vector<Scalar> soc_beta_;
    std::vector<Vec<Scalar>> soc_v_;
    std::vector<Mat<Scalar>> psd_R_;
    std::vector<Mat<Scalar>> psd_Rinv_;
};

// ---------------------------------------------------------------------------

template <typename Scalar>
class ConeSolver
{
public:
    explicit ConeSolver(SolverSettings<Scalar> settings = {}) : settings_(settings) {}

    ConeSolution<Scalar> solve(const ConeProgram<Scalar>& prog) const;

private:
    struct Block
    {
        typename NtScaling<Scalar>::BlockKind kind;
        int index;
        int offset;
        int rows;
        std::vector<int> cols; // structurally nonzero columns of G in this block
    };

    struct Kkt
    {
        const ConeProgram<Scalar>* prog;
        const NtScaling<Scalar>* scaling;
        const std::vector<Block>* blocks;
        Mat<Scalar> Ghat; // W^{-T} G
        Eigen::PartialPivLU<Mat<Scalar>> lu;
        Mat<Scalar> K;
        Scalar reg = 0;
        bool augmented = false;
    };

    struct Direction
    {
        Vec<Scalar> dx, dy, dz, ds, wdz, wids;
    };

    SolverSettings<Scalar> settings_;

    static std::vector<Block> make_blocks(const ConeProgram<Scalar>& prog);
    static void factor(Kkt& kkt, bool augmented);
    static Direction solve_kkt(const Kkt& kkt, const Vec<Scalar>& rx, const Vec<Scalar>& ry, const Vec<Scalar>& rz,
                               const Vec<Scalar>& q);
};

template <typename Scalar>
std::vector<typename ConeSolver<Scalar>::Block> ConeSolver<Scalar>::make_blocks(const ConeProgram<Scalar>& prog)
{
    std::vector<Block> blocks;
    const auto& d = prog.dims;
    using Kind = typename NtScaling<Scalar>::BlockKind;
    auto add = [&](Kind kind, int index, int off, int rows) {
        Block b{kind, index, off, rows, {}};
        for (int j = 0; j < prog.num_vars(); ++j)
            if (!prog.G.block(off, j, rows, 1).isZero(0))
                b.cols.push_back(j);
        blocks.push_back(std::move(b));
    };
    if (d.lp > 0)
        add(Kind::Lp, 0, 0, d.lp);
    for (std::size_t k = 0; k < d.soc.size(); ++k)
        add(Kind::Soc, static_cast<int>(k), d.soc_offset(static_cast<int>(k)), d.soc[k]);
    for (std::size_t k = 0; k < d.psd.size(); ++k)
        add(Kind::Psd, static_cast<int>(k), d.psd_offset(static_cast<int>(k)), svec_size(d.psd[k]));
    return blocks;
}

template <typename Scalar>
void ConeSolver<Scalar>::factor(Kkt& kkt, bool augmented)
{
    const auto& prog = *kkt.prog;
    const int n = prog.num_vars();
    const int p = prog.num_eq();
    const int m = prog.num_cone_rows();
    kkt.augmented = augmented;
    kkt.Ghat.resize(m, n);
    kkt.Ghat.setZero();
    Mat<Scalar> H;
    if (!augmented)
        H = Mat<Scalar>::Zero(n, n);
    using Mode = typename NtScaling<Scalar>::Mode;
    for (const auto& blk : *kkt.blocks)
    {
        if (blk.cols.empty())
            continue;
        Mat<Scalar> Gb(blk.rows, static_cast<int>(blk.cols.size()));
        for (std::size_t j = 0; j < blk.cols.size(); ++j)
            Gb.col(static_cast<int>(j)) = prog.G.block(blk.offset, blk.cols[j], blk.rows, 1);
        const Mat<Scalar> Hb = kkt.scaling->apply_block(Mode::WInvT, blk.kind, blk.index, blk.offset, Gb);
        for (std::size_t j = 0; j < blk.cols.size(); ++j)
            kkt.Ghat.block(blk.offset, blk.cols[j], blk.rows, 1) = Hb.col(static_cast<int>(j));
        if (augmented)
            continue;
        const Mat<Scalar> HtH = Hb.transpose() * Hb;
        for (std::size_t j = 0; j < blk.cols.size(); ++j)
            for (std::size_t i = 0; i < blk.cols.size(); ++i)
                H(blk.cols[i], blk.cols[j]) += HtH(static_cast<int>(i), static_cast<int>(j));
    }

    if (augmented)
    {
        // [0 A' Gh'; A 0 0; Gh 0 -I]
        const Scalar scale = std::max<Scalar>(Scalar(1), kkt.Ghat.cwiseAbs().maxCoeff());
        kkt.reg = std::numeric_limits<Scalar>::epsilon() * Scalar(100) * scale;
        kkt.K = Mat<Scalar>::Zero(n + p + m, n + p + m);
        kkt.K.block(0, n, n, p) = prog.A.transpose();
        kkt.K.block(0, n + p, n, m) = kkt.Ghat.transpose();
        kkt.K.block(n, 0, p, n) = prog.A;
        kkt.K.block(n + p, 0, m, n) = kkt.Ghat;
        kkt.K.bottomRightCorner(m, m).diagonal().setConstant(Scalar(-1));
        Mat<Scalar> Kreg = kkt.K;
        Kreg.topLeftCorner(n, n).diagonal().array() += kkt.reg;
        Kreg.block(n, n, p, p).diagonal().array() -= kkt.reg;
        kkt.lu.compute(Kreg);
        return;
    }

    const Scalar scale = std::max<Scalar>(Scalar(1), H.diagonal().cwiseAbs().maxCoeff());
    kkt.reg = std::numeric_limits<Scalar>::epsilon() * Scalar(100) * scale;
    kkt.K = Mat<Scalar>::Zero(n + p, n + p);
    kkt.K.topLeftCorner(n, n) = H;
    kkt.K.topRightCorner(n, p) = prog.A.transpose();
    kkt.K.bottomLeftCorner(p, n) = prog.A;
    Mat<Scalar> Kreg = kkt.K;
    Kreg.topLeftCorner(n, n).diagonal().array() += kkt.reg;
    Kreg.bottomRightCorner(p, p).diagonal().array() -= kkt.reg;
    kkt.lu.compute(Kreg);
}

template <typename Scalar>
typename ConeSolver<Scalar>::Direction ConeSolver<Scalar>::solve_kkt(const Kkt& kkt, const Vec<Scalar>& rx,
                                                                       const Vec<Scalar>& ry, const Vec<Scalar>& rz,
                                                                       const Vec<Scalar>& q)
{
    using Mode = typename NtScaling<Scalar>::Mode;
    const auto& prog = *kkt.prog;
    const int n = prog.num_vars();
    const int p = prog.num_eq();
    const int m = prog.num_cone_rows();
    const Vec<Scalar> wit_rz = kkt.scaling->apply(Mode::WInvT, rz);
    const int size = static_cast<int>(kkt.K.rows());
    Vec<Scalar> rhs(size);
    if (kkt.augmented)
    {
        rhs.head(n) = rx;
        rhs.segment(n, p) = ry;
        rhs.tail(m) = wit_rz - q;
    }
    else
    {
        rhs.head(n) = rx + kkt.Ghat.transpose() * (wit_rz - q);
        rhs.tail(p) = ry;
    }
    Vec<Scalar> sol = kkt.lu.solve(rhs);
    for (int refine = 0; refine < 3; ++refine)
    {
        const Vec<Scalar> res = rhs - kkt.K * sol;
        if (res.norm() <= std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + rhs.norm()))
            break;
        sol += kkt.lu.solve(res);
    }
    Direction d;
    d.dx = sol.head(n);
    d.dy = sol.segment(n, p);
    if (kkt.augmented)
        d.wdz = sol.tail(m);
    else
        d.wdz = kkt.Ghat * d.dx - wit_rz + q;
    d.wids = q - d.wdz;
    d.dz = kkt.scaling->apply(Mode::WInv, d.wdz);
    d.ds = kkt.scaling->apply(Mode::WT, d.wids);
    return d;
}

template <typename Scalar>
ConeSolution<Scalar> ConeSolver<Scalar>::solve(const ConeProgram<Scalar>& prog) const
{
    prog.validate();
    using std::sqrt;
    const auto& dims = prog.dims;
    const int n = prog.num_vars();
    const int p = prog.num_eq();
    const int m = prog.num_cone_rows();
    const Scalar degree = static_cast<Scalar>(dims.degree());
    const Vec<Scalar> e = cone_identity<Scalar>(dims);
    const auto blocks = make_blocks(prog);
    const bool augmented = n + p + m <= settings_.augmented_limit;

    ConeSolution<Scalar> out;

    // Starting point: least-squares primal and least-norm dual, shifted into K.
    Vec<Scalar> x, y, s, z;
    {
        NtScaling<Scalar> ident(e, e, dims);
        Kkt kkt{&prog, &ident, &blocks, {}, {}, {}, 0, false};
        factor(kkt, augmented);
        const Vec<Scalar> zero_m = Vec<Scalar>::Zero(m);
        // primal: min ||G x - h|| s.t. A x = b  ->  s = h - G x
        Direction dp = solve_kkt(kkt, Vec<Scalar>::Zero(n), prog.b, prog.h, zero_m);
        x = dp.dx;
        s = prog.h - prog.G * x;
        // dual: min ||z|| s.t. G'z + A'y + c = 0
        Direction dd = solve_kkt(kkt, -prog.c, Vec<Scalar>::Zero(p), zero_m, zero_m);
        y = dd.dy;
        z = dd.dz;
        const Scalar ts = -cone_min_eig<Scalar>(s, dims);
        const Scalar tz = -cone_min_eig<Scalar>(z, dims);
        const Scalar nrms = s.norm(), nrmz = z.norm();
        if (ts >= -Scalar(1e-8) * std::max<Scalar>(nrms, 1))
            s += (Scalar(1) + ts) * e;
        if (tz >= -Scalar(1e-8) * std::max<Scalar>(nrmz, 1))
            z += (Scalar(1) + tz) * e;
    }
    Scalar tau = 1, kappa = 1;

    const Scalar resx0 = std::max<Scalar>(1, prog.c.norm());
    const Scalar resy0 = std::max<Scalar>(1, prog.b.norm());
    const Scalar resz0 = std::max<Scalar>(1, prog.h.norm());

    struct Snapshot
    {
        bool valid = false;
        Vec<Scalar> x, y, s, z;
        Scalar tau = 1, pres = 0, dres = 0, gap = 0, relgap = 0, pcost = 0, dcost = 0;
    } best;

    const auto finish_optimal = [&](const Snapshot& snap) {
        out.status = ConeStatus::Optimal;
        out.x = snap.x / snap.tau;
        out.y = snap.y / snap.tau;
        out.s = snap.s / snap.tau;
        out.z = snap.z / snap.tau;
        out.primal_objective = snap.pcost;
        out.dual_objective = snap.dcost;
        out.primal_residual = snap.pres;
        out.dual_residual = snap.dres;
        out.gap = snap.gap;
        return out;
    };

    for (int iter = 0;; ++iter)
    {
        out.iterations = iter;
        // residuals
        const Vec<Scalar> hrx = -(prog.A.transpose() * y + prog.G.transpose() * z);
        const Vec<Scalar> hry = prog.A * x;
        const Vec<Scalar> hrz = s + prog.G * x;
        const Vec<Scalar> rx = -hrx + prog.c * tau; // A'y + G'z + c tau
        const Vec<Scalar> ry = hry - prog.b * tau;  // A x - b tau
        const Vec<Scalar> rz = hrz - prog.h * tau;  // s + G x - h tau
        const Scalar cx = prog.c.dot(x), by = prog.b.dot(y), hz = prog.h.dot(z);
        const Scalar rt = kappa + cx + by + hz;
        const Scalar sz = s.dot(z);
        const Scalar mu = (sz + tau * kappa) / (degree + 1);

        const Scalar pcost = cx / tau;
        const Scalar dcost = -(by + hz) / tau;
        const Scalar gap = sz / (tau * tau);
        Scalar relgap = std::numeric_limits<Scalar>::infinity();
        if (pcost < 0)
            relgap = gap / -pcost;
        else if (dcost > 0)
            relgap = gap / dcost;
        const Scalar pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
        const Scalar dres = rx.norm() / resx0 / tau;
        const Scalar pinfres = (hz + by < 0) ? hrx.norm() / resx0 / (-hz - by) : std::numeric_limits<Scalar>::infinity();
        const Scalar dinfres = (cx < 0) ? std::max(hry.norm() / resy0, hrz.norm() / resz0) / (-cx)
                                        : std::numeric_limits<Scalar>::infinity();

        Snapshot snap{true, x, y, s, z, tau, pres, dres, gap, relgap, pcost, dcost};
        if (pres <= settings_.feastol && dres <= settings_.feastol &&
            (gap <= settings_.abstol || relgap <= settings_.reltol))
            return finish_optimal(snap);
        if (pinfres <= settings_.feastol)
        {
            out.status = ConeStatus::PrimalInfeasible;
            const Scalar scale = -hz - by;
            out.y = y / scale;
            out.z = z / scale;
            out.primal_residual = pinfres;
            return out;
        }
        if (dinfres <= settings_.feastol)
        {
            out.status = ConeStatus::DualInfeasible;
            out.x = x / -cx;
            out.s = s / -cx;
            out.dual_residual = dinfres;
            return out;
        }
        // keep the most accurate iterate in case the run stalls
        const auto merit = [](const Snapshot& sn) {
            return std::max({sn.pres, sn.dres, std::min(sn.relgap, sn.gap)});
        };
        if (!best.valid || merit(snap) < merit(best))
            best = snap;

        const auto stalled_result = [&]() {
            const Scalar f = settings_.stall_factor;
            if (best.valid && best.pres <= f * settings_.feastol && best.dres <= f * settings_.feastol &&
                (best.gap <= f * settings_.abstol || best.relgap <= f * settings_.reltol))
                return finish_optimal(best);
            out.status = ConeStatus::NumericalError;
            if (best.valid)
            {
                out.x = best.x / best.tau;
                out.y = best.y / best.tau;
                out.s = best.s / best.tau;
                out.z = best.z / best.tau;
                out.primal_objective = best.pcost;
                out.dual_objective = best.dcost;
                out.primal_residual = best.pres;
                out.dual_residual = best.dres;
                out.gap = best.gap;
            }
            return out;
        };

        if (iter >= settings_.max_iters)
        {
            auto res = stalled_result();
            if (res.status == ConeStatus::NumericalError)
                res.status = ConeStatus::MaxIterations;
            return res;
        }

        NtScaling<Scalar> W(s, z, dims);
        if (!W.ok())
            return stalled_result();
        Kkt kkt{&prog, &W, &blocks, {}, {}, {}, 0, false};
        factor(kkt, augmented);
        const Vec<Scalar>& lambda = W.lambda();

        // direction associated with dtau = 1
        const Direction d1 = solve_kkt(kkt, -prog.c, prog.b, prog.h, Vec<Scalar>::Zero(m));
        const Scalar denom_base = prog.c.dot(d1.dx) + prog.b.dot(d1.dy) + prog.h.dot(d1.dz) - kappa / tau;

        const auto newton = [&](Scalar sigma, const Vec<Scalar>& rc, Scalar rk, Direction& d, Scalar& dtau,
                                Scalar& dkappa) {
            const Scalar f = Scalar(1) - sigma;
            const Vec<Scalar> q = jordan_solve<Scalar>(lambda, rc, dims);
            d = solve_kkt(kkt, -f * rx, -f * ry, -f * rz, q);
            dtau = (-f * rt - rk / tau - prog.c.dot(d.dx) - prog.b.dot(d.dy) - prog.h.dot(d.dz)) / denom_base;
            d.dx += dtau * d1.dx;
            d.dy += dtau * d1.dy;
            d.dz += dtau * d1.dz;
            d.ds += dtau * d1.ds;
            d.wdz += dtau * d1.wdz;
            d.wids += dtau * d1.wids;
            dkappa = (rk - kappa * dtau) / tau;
        };

        const auto max_step = [&](const Direction& d, Scalar dtau, Scalar dkappa) {
            Scalar a = std::min(cone_max_step<Scalar>(lambda, d.wids, dims), cone_max_step<Scalar>(lambda, d.wdz, dims));
            if (dtau < 0)
                a = std::min(a, -tau / dtau);
            if (dkappa < 0)
                a = std::min(a, -kappa / dkappa);
            return a;
        };

        // predictor
        Direction da;
        Scalar dtau_a = 0, dkappa_a = 0;
        const Vec<Scalar> ll = jordan<Scalar>(lambda, lambda, dims);
        newton(Scalar(0), -ll, -tau * kappa, da, dtau_a, dkappa_a);
        const Scalar alpha_a = std::min<Scalar>(Scalar(1), max_step(da, dtau_a, dkappa_a));
        const Scalar sigma = std::clamp<Scalar>(std::pow(Scalar(1) - alpha_a, 3), Scalar(0), Scalar(1));

        // corrector
        Direction dc;
        Scalar dtau = 0, dkappa = 0;
        const Vec<Scalar> rc = -ll + sigma * mu * e - jordan<Scalar>(da.wids, da.wdz, dims);
        newton(sigma, rc, -tau * kappa + sigma * mu - dtau_a * dkappa_a, dc, dtau, dkappa);
        Scalar alpha = max_step(dc, dtau, dkappa);
        alpha = std::min<Scalar>(Scalar(1), settings_.step_fraction * alpha);
        if (!(alpha > Scalar(1e-12)) || !dc.dx.allFinite() || !std::isfinite(dtau))
            return stalled_result();

        x += alpha * dc.dx;
        y += alpha * dc.dy;
        z += alpha * dc.dz;
        s += alpha * dc.ds;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }
}

extern template class ConeSolver<double>;

} // namespace hetnet::conic
