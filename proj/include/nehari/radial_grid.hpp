#pragma once

// Piecewise-linear discretization of radial H¹ functions on a graded mesh
//   r_i = R (i/n)^gamma,  i = 0..n,
// with product-integration tables for the singular weights r^{N-1-s}.
//
// On each cell the integrand |u|^power is replaced by its quadratic
// interpolant through the three Gauss-Legendre points, and that quadratic is
// integrated exactly against the weight. The per-cell weights therefore come
// from closed-form moments ∫ x^k r^{N-1-s} dr (x the local coordinate in
// [0,1]); no numerical integration of the weight is ever performed. The
// surface measure of the unit sphere is omitted from every integral.

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "nehari/error.hpp"

namespace nehari {

/// Which weight exponent s in r^{N-1-s}.
enum class Weight : std::size_t { Zero = 0, S1 = 1, S2 = 2 };

inline constexpr std::size_t gauss_points = 3;

/// Gauss-Legendre abscissae on [0, 1].
inline constexpr std::array<double, gauss_points> gauss_nodes = {
    0.5 - 0.3872983346207416885, // 0.5 * sqrt(3/5)
    0.5,
    0.5 + 0.3872983346207416885,
};

namespace detail {

// h ∫_0^1 x^k (a + h x)^alpha dx for k = 0, 1, 2, in closed form.
inline std::array<double, 3> cell_moments(double a, double h, double alpha)
{
    std::array<double, 3> m{};
    if (a == 0.0) {
        const double scale = std::pow(h, alpha + 1.0);
        for (int k = 0; k < 3; ++k) m[k] = scale / (k + alpha + 1.0);
        return m;
    }
    const double eps = h / a;
    if (eps < 0.5) {
        // (1 + eps x)^alpha expanded as a binomial series; ratio of successive
        // terms is bounded by eps, so the sum converges to full precision.
        const double scale = h * std::pow(a, alpha);
        for (int k = 0; k < 3; ++k) {
            double binom = 1.0, power = 1.0, sum = 0.0;
            for (int j = 0; j < 400; ++j) {
                const double term = binom * power / (k + j + 1.0);
                sum += term;
                if (std::abs(term) <= 1e-18 * std::abs(sum) && j > 2) break;
                binom *= (alpha - j) / (j + 1.0);
                power *= eps;
            }
            m[k] = scale * sum;
        }
        return m;
    }
    // Moments of r^alpha, r^{alpha+1}, r^{alpha+2} over [a, b]; the shifts by a
    // lose at most a factor (1 + a/h)^2 <= 9 in relative accuracy here.
    const auto power_integral = [&](double e) {
        // (b^{e+1} - a^{e+1}) / (e+1) without cancellation
        return std::pow(a, e + 1.0) * std::expm1((e + 1.0) * std::log1p(eps)) / (e + 1.0);
    };
    const double P0 = power_integral(alpha);
    const double P1 = power_integral(alpha + 1.0);
    const double P2 = power_integral(alpha + 2.0);
    m[0] = P0;
    m[1] = (P1 - a * P0) / h;
    m[2] = (P2 - 2.0 * a * P1 + a * a * P0) / (h * h);
    return m;
}

// Monomial coefficients of the Lagrange basis on the Gauss nodes.
inline std::array<std::array<double, 3>, 3> lagrange_monomials()
{
    std::array<std::array<double, 3>, 3> c{};
    for (std::size_t j = 0; j < 3; ++j) {
        const double xa = gauss_nodes[(j + 1) % 3];
        const double xb = gauss_nodes[(j + 2) % 3];
        const double denom = (gauss_nodes[j] - xa) * (gauss_nodes[j] - xb);
        c[j] = {xa * xb / denom, -(xa + xb) / denom, 1.0 / denom};
    }
    return c;
}

} // namespace detail

/// Immutable mesh plus quadrature tables and the factored H¹ Gram matrix.
class RadialGrid {
public:
    RadialGrid(int n, double R, double gamma, int N, double s1, double s2)
        : n_(n), R_(R), gamma_(gamma), N_(N), s_{0.0, s1, s2}
    {
        using detail::require;
        constexpr auto bad = ErrorKind::InvalidParameter;
        require(n >= 16, bad, "build_grid: n must be >= 16");
        require(std::isfinite(R) && R > 0.0, bad, "build_grid: R must be > 0");
        require(std::isfinite(gamma) && gamma >= 1.0, bad, "build_grid: gamma must be >= 1");
        require(N >= 3, bad, "build_grid: N must be >= 3");
        require(s1 >= 0.0 && s1 < s2 && s2 < 2.0, bad, "build_grid: need 0 <= s1 < s2 < 2");

        nodes_.resize(n + 1);
        for (int i = 0; i <= n; ++i)
            nodes_[i] = R * std::pow(static_cast<double>(i) / n, gamma);
        nodes_[0] = 0.0;
        nodes_[n] = R;
        for (int i = 0; i < n; ++i)
            require(nodes_[i + 1] > nodes_[i], ErrorKind::InvalidParameter,
                    "build_grid: nodes must be strictly increasing");

        const auto lagrange = detail::lagrange_monomials();
        for (std::size_t w = 0; w < 3; ++w) {
            moments_[w].resize(n);
            weights_[w].resize(n);
            const double alpha = N - 1.0 - s_[w];
            for (int i = 0; i < n; ++i) {
                const auto m = detail::cell_moments(nodes_[i], cell_width(i), alpha);
                moments_[w][i] = m;
                for (std::size_t j = 0; j < 3; ++j)
                    weights_[w][i][j] =
                        lagrange[j][0] * m[0] + lagrange[j][1] * m[1] + lagrange[j][2] * m[2];
            }
        }
        assemble_gram();
    }

    int n() const noexcept { return n_; }
    double R() const noexcept { return R_; }
    double gamma() const noexcept { return gamma_; }
    int N() const noexcept { return N_; }
    double s(Weight w) const noexcept { return s_[static_cast<std::size_t>(w)]; }
    double s1() const noexcept { return s_[1]; }
    double s2() const noexcept { return s_[2]; }

    std::span<const double> nodes() const noexcept { return nodes_; }
    double node(int i) const noexcept { return nodes_[i]; }
    double cell_width(int i) const noexcept { return nodes_[i + 1] - nodes_[i]; }

    /// ∫_cell x^k r^{N-1-s} dr, k = 0, 1, 2.
    const std::array<double, 3>& moments(Weight w, int cell) const noexcept
    {
        return moments_[static_cast<std::size_t>(w)][cell];
    }
    /// Product-integration weights at the three Gauss points of a cell.
    const std::array<double, 3>& weights(Weight w, int cell) const noexcept
    {
        return weights_[static_cast<std::size_t>(w)][cell];
    }

    /// Index of the cell containing r (r in [0, R]).
    int locate(double r) const noexcept
    {
        if (r <= 0.0) return 0;
        if (r >= R_) return n_ - 1;
        int i = static_cast<int>(n_ * std::pow(r / R_, 1.0 / gamma_));
        if (i > n_ - 1) i = n_ - 1;
        while (i > 0 && nodes_[i] > r) --i;
        while (i < n_ - 1 && nodes_[i + 1] < r) ++i;
        return i;
    }

    /// Tridiagonal H¹ Gram matrix on the free nodes 0..n-1.
    std::span<const double> gram_diagonal() const noexcept { return diag_; }
    std::span<const double> gram_offdiagonal() const noexcept { return offdiag_; }

    /// Solves K v = load on the free nodes (load[n] is ignored, v[n] = 0).
    void solve_gram(std::span<const double> load, std::span<double> v) const
    {
        const int m = n_;
        v[0] = load[0] / pivot_[0];
        for (int i = 1; i < m; ++i) v[i] = (load[i] - offdiag_[i - 1] * v[i - 1]) / pivot_[i];
        for (int i = m - 2; i >= 0; --i) v[i] -= upper_[i] * v[i + 1];
        v[m] = 0.0;
    }

private:
    void assemble_gram()
    {
        const int m = n_;
        diag_.assign(m, 0.0);
        offdiag_.assign(m - 1, 0.0);
        for (int i = 0; i < m; ++i) {
            const double h = cell_width(i);
            const double stiff = moments(Weight::Zero, i)[0] / (h * h);
            const auto& w = weights(Weight::Zero, i);
            double mLL = 0.0, mLR = 0.0, mRR = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                const double x = gauss_nodes[j];
                mLL += w[j] * (1.0 - x) * (1.0 - x);
                mLR += w[j] * (1.0 - x) * x;
                mRR += w[j] * x * x;
            }
            diag_[i] += stiff + mLL;
            if (i + 1 < m) {
                diag_[i + 1] += stiff + mRR;
                offdiag_[i] = -stiff + mLR;
            }
        }
        // Cholesky-free LDU sweep of the SPD tridiagonal matrix.
        pivot_.assign(m, 0.0);
        upper_.assign(m, 0.0);
        pivot_[0] = diag_[0];
        for (int i = 0; i < m; ++i) {
            if (i > 0) pivot_[i] = diag_[i] - offdiag_[i - 1] * upper_[i - 1];
            if (!(pivot_[i] > 0.0) || !std::isfinite(pivot_[i]))
                throw Error(ErrorKind::AssemblyFailure, "RadialGrid: Gram matrix is not positive definite");
            if (i + 1 < m) upper_[i] = offdiag_[i] / pivot_[i];
        }
    }

    int n_;
    double R_;
    double gamma_;
    int N_;
    std::array<double, 3> s_;
    std::vector<double> nodes_;
    std::array<std::vector<std::array<double, 3>>, 3> moments_;
    std::array<std::vector<std::array<double, 3>>, 3> weights_;
    std::vector<double> diag_, offdiag_, pivot_, upper_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr build_grid(int n, double R, double gamma, int N, double s1, double s2)
{
    return std::make_shared<const RadialGrid>(n, R, gamma, N, s1, s2);
}

/// Nodal values of a radial function; the value at r = R is pinned to 0.
class RadialField {
public:
    explicit RadialField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->n() + 1, 0.0) {}

    RadialField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values))
    {
        detail::require(values_.size() == static_cast<std::size_t>(grid_->n() + 1),
                        ErrorKind::GridMismatch, "RadialField: value count does not match grid");
        values_.back() = 0.0;
    }

    /// Samples f at the nodes.
    template <class F>
    static RadialField sample(GridPtr grid, F&& f)
    {
        RadialField out(grid);
        for (int i = 0; i < grid->n(); ++i) out.values_[i] = f(grid->node(i));
        return out;
    }

    const RadialGrid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }

    /// Linear interpolant at r; zero outside [0, R].
    double at(double r) const noexcept
    {
        if (r < 0.0 || r >= grid_->R()) return 0.0;
        const int i = grid_->locate(r);
        const double x = (r - grid_->node(i)) / grid_->cell_width(i);
        return values_[i] * (1.0 - x) + values_[i + 1] * x;
    }

    bool same_grid(const RadialField& other) const noexcept { return grid_ == other.grid_; }

    RadialField& operator*=(double a) noexcept
    {
        for (double& v : values_) v *= a;
        return *this;
    }
    /// this += a * other
    RadialField& axpy(double a, const RadialField& other)
    {
        check_same(other);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * other.values_[i];
        values_.back() = 0.0;
        return *this;
    }

    friend RadialField operator*(double a, RadialField f) { return f *= a; }

    void check_same(const RadialField& other) const
    {
        if (!same_grid(other))
            throw Error(ErrorKind::GridMismatch, "fields live on different grids");
    }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

namespace detail {

inline double gauss_value(std::span<const double> u, int cell, std::size_t j) noexcept
{
    const double x = gauss_nodes[j];
    return u[cell] * (1.0 - x) + u[cell + 1] * x;
}

} // namespace detail

/// ∫_0^R |f|^power r^{N-1-s} dr.
inline double weighted_integral(const RadialField& f, double power, Weight weight)
{
    detail::require(power >= 1.0, ErrorKind::InvalidParameter, "weighted_integral: power must be >= 1");
    const RadialGrid& grid = f.grid();
    const auto u = f.values();
    double sum = 0.0;
    for (int i = 0; i < grid.n(); ++i) {
        const auto& w = grid.weights(weight, i);
        for (std::size_t j = 0; j < gauss_points; ++j)
            sum += w[j] * std::pow(std::abs(detail::gauss_value(u, i, j)), power);
    }
    return sum;
}

/// ∫ |f'|² r^{N-1} dr of the piecewise-linear interpolant.
inline double dirichlet_energy(const RadialField& f)
{
    const RadialGrid& grid = f.grid();
    const auto u = f.values();
    double sum = 0.0;
    for (int i = 0; i < grid.n(); ++i) {
        const double h = grid.cell_width(i);
        const double du = u[i + 1] - u[i];
        sum += grid.moments(Weight::Zero, i)[0] * du * du / (h * h);
    }
    return sum;
}

/// H¹ inner product ∫ (f'g' + fg) r^{N-1} dr.
inline double h1_inner(const RadialField& f, const RadialField& g)
{
    f.check_same(g);
    const RadialGrid& grid = f.grid();
    const auto a = f.values();
    const auto b = g.values();
    double sum = 0.0;
    for (int i = 0; i < grid.n(); ++i) {
        const double h = grid.cell_width(i);
        sum += grid.moments(Weight::Zero, i)[0] * (a[i + 1] - a[i]) * (b[i + 1] - b[i]) / (h * h);
        const auto& w = grid.weights(Weight::Zero, i);
        for (std::size_t j = 0; j < gauss_points; ++j)
            sum += w[j] * detail::gauss_value(a, i, j) * detail::gauss_value(b, i, j);
    }
    return sum;
}

inline double h1_norm(const RadialField& f) { return std::sqrt(h1_inner(f, f)); }

/// Load vector l_i = ∫ rho φ_i r^{N-1} dr of the L² pairing with a field.
inline std::vector<double> mass_load(const RadialField& rho)
{
    const RadialGrid& grid = rho.grid();
    const auto u = rho.values();
    std::vector<double> load(grid.n() + 1, 0.0);
    for (int i = 0; i < grid.n(); ++i) {
        const auto& w = grid.weights(Weight::Zero, i);
        for (std::size_t j = 0; j < gauss_points; ++j) {
            const double x = gauss_nodes[j];
            const double v = w[j] * detail::gauss_value(u, i, j);
            load[i] += v * (1.0 - x);
            load[i + 1] += v * x;
        }
    }
    return load;
}

/// K v, the H¹ Gram matrix applied to the free nodal values of v.
inline std::vector<double> gram_apply(const RadialField& v)
{
    const RadialGrid& grid = v.grid();
    const auto d = grid.gram_diagonal();
    const auto o = grid.gram_offdiagonal();
    const auto x = v.values();
    const int m = grid.n();
    std::vector<double> out(m + 1, 0.0);
    for (int i = 0; i < m; ++i) {
        out[i] = d[i] * x[i];
        if (i > 0) out[i] += o[i - 1] * x[i - 1];
        if (i + 1 < m) out[i] += o[i] * x[i + 1];
    }
    return out;
}

/// Riesz representative of a load vector: (v, w)_{H¹} = load·w for all w.
inline RadialField riesz_solve_load(const GridPtr& grid, std::span<const double> load)
{
    detail::require(load.size() == static_cast<std::size_t>(grid->n() + 1), ErrorKind::GridMismatch,
                    "riesz_solve: load size does not match grid");
    RadialField v(grid);
    grid->solve_gram(load, v.values());
    return v;
}

/// Solves (-Δ + 1) v = rhs weakly with v(R) = 0.
inline RadialField riesz_solve(const RadialField& rhs)
{
    const auto load = mass_load(rhs);
    return riesz_solve_load(rhs.grid_ptr(), load);
}

/// r ↦ f(r / rho) on the same grid.
inline RadialField dilate_field(const RadialField& f, double rho)
{
    detail::require(rho > 0.0, ErrorKind::InvalidParameter, "dilate_field: rho must be > 0");
    if (rho == 1.0) return f;
    const RadialGrid& grid = f.grid();
    RadialField out(f.grid_ptr());
    auto v = out.values();
    for (int i = 0; i < grid.n(); ++i) v[i] = f.at(grid.node(i) / rho);
    return out;
}

} // namespace nehari
