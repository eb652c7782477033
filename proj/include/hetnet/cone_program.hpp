#pragma once

// Canonical conic form shared by every subproblem in the library:
//
//     minimize    c'x
//     subject to  G x + s = h,   A x = b,   s in K
//
// K is a product of a nonnegative orthant, second-order cones and
// positive-semidefinite cones (stored as scaled lower-triangular vectors).
// Blocks are laid out in that order inside s and z.

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hetnet/types.hpp"

namespace hetnet::conic
{

/// Number of entries of svec(S) for an order-n symmetric matrix.
constexpr int svec_size(int order) { return order * (order + 1) / 2; }

/// Position of S(row, col), row >= col, inside svec(S).
constexpr int svec_index(int order, int row, int col)
{
    return col * order - col * (col - 1) / 2 + (row - col);
}

struct ConeDims
{
    int lp = 0;
    std::vector<int> soc;
    std::vector<int> psd; // matrix orders

    int rows() const
    {
        int m = lp;
        for (int q : soc)
            m += q;
        for (int n : psd)
            m += svec_size(n);
        return m;
    }

    /// Degree of the cone (number of "eigenvalues").
    int degree() const
    {
        int d = lp + static_cast<int>(soc.size());
        for (int n : psd)
            d += n;
        return d;
    }

    int soc_offset(int index) const
    {
        int off = lp;
        for (int i = 0; i < index; ++i)
            off += soc[i];
        return off;
    }

    int psd_offset(int index) const
    {
        int off = soc_offset(static_cast<int>(soc.size()));
        for (int i = 0; i < index; ++i)
            off += svec_size(psd[i]);
        return off;
    }
};

template <typename Scalar>
struct ConeProgram
{
    Vec<Scalar> c;
    Mat<Scalar> G;
    Vec<Scalar> h;
    Mat<Scalar> A;
    Vec<Scalar> b;
    ConeDims dims;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_eq() const { return static_cast<int>(A.rows()); }
    int num_cone_rows() const { return static_cast<int>(G.rows()); }

    void validate() const
    {
        const auto n = c.size();
        if (G.cols() != n || A.cols() != n)
            throw std::invalid_argument("cone program: column count mismatch");
        if (G.rows() != h.size() || A.rows() != b.size())
            throw std::invalid_argument("cone program: row count mismatch");
        if (dims.rows() != G.rows())
            throw std::invalid_argument("cone program: cone dimensions do not cover G");
        if (dims.lp < 0)
            throw std::invalid_argument("cone program: negative orthant size");
        for (int q : dims.soc)
            if (q < 1)
                throw std::invalid_argument("cone program: empty second-order cone");
        for (int p : dims.psd)
            if (p < 1)
                throw std::invalid_argument("cone program: empty PSD cone");
    }
};

/// Sparse affine expression  sum_i coef_i * x[var_i] + constant.
template <typename Scalar>
struct Affine
{
    std::vector<std::pair<int, Scalar>> terms;
    Scalar constant = 0;

    Affine() = default;
    explicit Affine(Scalar value) : constant(value) {}

    Affine& add(int var, Scalar coef)
    {
        if (coef != Scalar(0))
            terms.emplace_back(var, coef);
        return *this;
    }

    Affine& operator+=(const Affine& other)
    {
        terms.insert(terms.end(), other.terms.begin(), other.terms.end());
        constant += other.constant;
        return *this;
    }

    Affine& operator*=(Scalar factor)
    {
        for (auto& t : terms)
            t.second *= factor;
        constant *= factor;
        return *this;
    }

    friend Affine operator*(Scalar factor, Affine expr) { return expr *= factor; }
};

/// Incremental construction of a ConeProgram. Constraints may be added in any
/// order; build() lays them out as orthant | SOC | PSD.
template <typename Scalar>
class ProgramBuilder
{
public:
    using Expr = Affine<Scalar>;

    int add_variables(int count)
    {
        const int first = num_vars_;
        num_vars_ += count;
        objective_.resize(num_vars_, Scalar(0));
        return first;
    }

    int num_vars() const { return num_vars_; }

    void set_objective(int var, Scalar coef) { objective_.at(var) = coef; }

    /// expr == 0; returns the equality row.
    int add_equality(Expr expr)
    {
        eq_.push_back(std::move(expr));
        return static_cast<int>(eq_.size()) - 1;
    }

    /// expr >= 0; returns the orthant row (also its index in z).
    int add_nonneg(Expr expr)
    {
        lp_.push_back(std::move(expr));
        return static_cast<int>(lp_.size()) - 1;
    }

    /// entries[0] >= ||entries[1..]||; returns the cone index.
    int add_soc(std::vector<Expr> entries)
    {
        if (entries.empty())
            throw std::invalid_argument("add_soc: empty cone");
        soc_.push_back(std::move(entries));
        return static_cast<int>(soc_.size()) - 1;
    }

    /// Symmetric matrix S(x) >= 0 given by its lower triangle, column-major
    /// (the order used by svec_index). Returns the cone index.
    int add_psd(int order, std::vector<Expr> lower)
    {
        if (static_cast<int>(lower.size()) != svec_size(order))
            throw std::invalid_argument("add_psd: wrong number of entries");
        psd_order_.push_back(order);
        psd_.push_back(std::move(lower));
        return static_cast<int>(psd_.size()) - 1;
    }

    ConeDims dims() const
    {
        ConeDims d;
        d.lp = static_cast<int>(lp_.size());
        for (const auto& cone : soc_)
            d.soc.push_back(static_cast<int>(cone.size()));
        d.psd = psd_order_;
        return d;
    }

    ConeProgram<Scalar> build() const
    {
        ConeProgram<Scalar> prog;
        prog.dims = dims();
        const int n = num_vars_;
        const int m = prog.dims.rows();
        prog.c = Eigen::Map<const Vec<Scalar>>(objective_.data(), n);
        prog.G = Mat<Scalar>::Zero(m, n);
        prog.h = Vec<Scalar>::Zero(m);
        prog.A = Mat<Scalar>::Zero(static_cast<int>(eq_.size()), n);
        prog.b = Vec<Scalar>::Zero(static_cast<int>(eq_.size()));

        for (int r = 0; r < static_cast<int>(eq_.size()); ++r)
        {
            for (const auto& [var, coef] : eq_[r].terms)
                prog.A(r, var) += coef;
            prog.b(r) = -eq_[r].constant;
        }

        int row = 0;
        auto emit = [&](const Expr& e, Scalar scale) {
            for (const auto& [var, coef] : e.terms)
                prog.G(row, var) -= scale * coef;
            prog.h(row) = scale * e.constant;
            ++row;
        };
        for (const auto& e : lp_)
            emit(e, Scalar(1));
        for (const auto& cone : soc_)
            for (const auto& e : cone)
                emit(e, Scalar(1));
        const Scalar r2 = std::sqrt(Scalar(2));
        for (std::size_t k = 0; k < psd_.size(); ++k)
        {
            const int order = psd_order_[k];
            for (int col = 0; col < order; ++col)
                for (int r = col; r < order; ++r)
                    emit(psd_[k][svec_index(order, r, col)], r == col ? Scalar(1) : r2);
        }
        return prog;
    }

private:
    int num_vars_ = 0;
    std::vector<Scalar> objective_;
    std::vector<Expr> eq_;
    std::vector<Expr> lp_;
    std::vector<std::vector<Expr>> soc_;
    std::vector<std::vector<Expr>> psd_;
    std::vector<int> psd_order_;
};

/// Debug dump, one constraint per line:
///   obj  <var>:<coef> ...
///   eq   <row> rhs=<b> <var>:<coef> ...
///   lp   <row> h=<h> <var>:<coef> ...
///   soc  <cone> <entry> h=<h> <var>:<coef> ...
///   psd  <cone> <svec entry> h=<h> <var>:<coef> ...
/// Coefficients are those of G (s = h - G x), zeros omitted.
void dump(std::ostream& os, const ConeProgram<double>& prog);

} // namespace hetnet::conic
