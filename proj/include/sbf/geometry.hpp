#pragma once

#include "sbf/error.hpp"
#include "sbf/special.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace sbf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double clamp_dot(double t) { return std::clamp(t, -1.0, 1.0); }

// x . y for unit vectors. Near t = 1 it goes through the chord, 1 - |x - y|^2 / 2,
// so coincident points give exactly 1 and close pairs keep their separation.
template <class A, class B>
inline double sphere_dot(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y)
{
    const double t = x.dot(y);
    if (t > 0.5)
        return clamp_dot(1.0 - 0.5 * (x - y).squaredNorm());
    return clamp_dot(t);
}

inline double geodesic_distance(const Vec& p, const Vec& q) { return std::acos(clamp_dot(p.dot(q))); }

// Points are stored column-wise, one unit vector of length n+1 per column.
struct CenterSet {
    int n = 2;
    Mat points;
    double q = 0.0;   // separation radius (exact)
    double h = 0.0;   // mesh norm (grid supremum, exact on S^1)
    double rho = 0.0; // h / q
    long grid_points = 0;

    int size() const { return static_cast<int>(points.cols()); }
    Vec point(int i) const { return points.col(i); }
};

// Nearest-neighbour search by scanning outward in the last coordinate; the
// coordinate gap never exceeds the chordal distance, which bounds the scan.
class BandIndex {
public:
    BandIndex() = default;
    explicit BandIndex(const Mat& pts) : pts_(&pts)
    {
        const int N = static_cast<int>(pts.cols());
        const int k = static_cast<int>(pts.rows()) - 1;
        order_.resize(N);
        std::iota(order_.begin(), order_.end(), 0);
        std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) { return pts(k, a) < pts(k, b); });
        key_.resize(N);
        for (int i = 0; i < N; ++i)
            key_[i] = pts(k, order_[i]);
    }

    // Returns the index of the nearest point and its dot product with x.
    std::pair<int, double> nearest(const double* x) const
    {
        const Mat& P = *pts_;
        const int N = static_cast<int>(key_.size());
        const int dim = static_cast<int>(P.rows());
        const double kx = x[dim - 1];
        int hi = static_cast<int>(std::lower_bound(key_.begin(), key_.end(), kx) - key_.begin());
        int lo = hi - 1;
        int best = -1;
        double best_dot = -2.0;
        auto visit = [&](int j) {
            const int idx = order_[j];
            const double* c = P.col(idx).data();
            double d = 0.0;
            for (int r = 0; r < dim; ++r)
                d += c[r] * x[r];
            if (d > best_dot) {
                best_dot = d;
                best = idx;
            }
        };
        while (lo >= 0 || hi < N) {
            const double chord2 = best < 0 ? inf : 2.0 - 2.0 * best_dot;
            const double glo = lo >= 0 ? kx - key_[lo] : inf;
            const double ghi = hi < N ? key_[hi] - kx : inf;
            if (glo <= ghi) {
                if (glo * glo > chord2)
                    break;
                visit(lo--);
            } else {
                if (ghi * ghi > chord2)
                    break;
                visit(hi++);
            }
        }
        return {best, best_dot};
    }

private:
    const Mat* pts_ = nullptr;
    std::vector<int> order_;
    std::vector<double> key_;
};

// Fibonacci lattice on S^2.
inline Mat fibonacci_points(int N)
{
    require(N >= 1, "fibonacci_points: N must be positive");
    Mat P(3, N);
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < N; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / N;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        P(0, i) = r * std::cos(phi);
        P(1, i) = r * std::sin(phi);
        P(2, i) = z;
    }
    return P;
}

inline Mat equispaced_circle(int N, double offset = 0.0)
{
    require(N >= 1, "equispaced_circle: N must be positive");
    Mat P(2, N);
    for (int i = 0; i < N; ++i) {
        const double a = offset + 2.0 * pi * i / N;
        P(0, i) = std::cos(a);
        P(1, i) = std::sin(a);
    }
    return P;
}

inline double radical_inverse2(unsigned v)
{
    double r = 0.0, f = 0.5;
    while (v) {
        if (v & 1u)
            r += f;
        v >>= 1;
        f *= 0.5;
    }
    return r;
}

inline Mat hammersley_points(int N)
{
    require(N >= 1, "hammersley_points: N must be positive");
    Mat P(3, N);
    for (int i = 0; i < N; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / N;
        const double phi = 2.0 * pi * radical_inverse2(static_cast<unsigned>(i));
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        P(0, i) = r * std::cos(phi);
        P(1, i) = r * std::sin(phi);
        P(2, i) = z;
    }
    return P;
}

inline Mat uniform_random_points(int n, int N, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat P(n + 1, N);
    for (int i = 0; i < N; ++i) {
        double s;
        do {
            for (int r = 0; r <= n; ++r)
                P(r, i) = g(rng);
            s = P.col(i).norm();
        } while (s < 1e-8);
        P.col(i) /= s;
    }
    return P;
}

inline Mat octahedron_points()
{
    Mat P = Mat::Zero(3, 6);
    for (int k = 0; k < 3; ++k) {
        P(k, 2 * k) = 1.0;
        P(k, 2 * k + 1) = -1.0;
    }
    return P;
}

inline Mat random_rotation(int dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat A(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            A(i, j) = g(rng);
    Eigen::HouseholderQR<Mat> qr(A);
    Mat Q = qr.householderQ();
    if (Q.determinant() < 0)
        Q.col(0) *= -1.0;
    return Q;
}

inline double separation_radius(const Mat& P)
{
    const int N = static_cast<int>(P.cols());
    double maxdot = -1.0;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j)
            maxdot = std::max(maxdot, P.col(i).dot(P.col(j)));
    // acos loses accuracy near 1; use the chord for close pairs.
    double best_chord = std::sqrt(std::max(0.0, 2.0 - 2.0 * maxdot));
    for (int i = 0; i < N && maxdot > 0.999; ++i)
        for (int j = i + 1; j < N; ++j)
            best_chord = std::min(best_chord, (P.col(i) - P.col(j)).norm());
    return std::asin(std::min(1.0, 0.5 * best_chord)); // half of 2 asin(chord/2)
}

inline std::vector<double> circle_angles(const Mat& P)
{
    std::vector<double> a(P.cols());
    for (int i = 0; i < P.cols(); ++i) {
        double t = std::atan2(P(1, i), P(0, i));
        if (t < 0)
            t += 2.0 * pi;
        a[i] = t;
    }
    return a;
}

// Exact covering radius on S^1: half the largest angular gap.
inline double circle_mesh_norm(const Mat& P)
{
    auto a = circle_angles(P);
    std::sort(a.begin(), a.end());
    double gap = a.front() + 2.0 * pi - a.back();
    for (size_t i = 1; i < a.size(); ++i)
        gap = std::max(gap, a[i] - a[i - 1]);
    return 0.5 * gap;
}

// Grid size used for the mesh-norm supremum on S^2: spacing about q/4.
inline long default_mesh_grid(double q)
{
    const double spacing = std::max(q / 4.0, 1e-3);
    const double m = 4.0 * pi / (spacing * spacing);
    return std::clamp(static_cast<long>(m), 20000L, 2000000L);
}

inline double grid_mesh_norm(const Mat& P, const Mat& grid)
{
    BandIndex idx(P);
    double worst = 1.0;
    for (int g = 0; g < grid.cols(); ++g)
        worst = std::min(worst, idx.nearest(grid.col(g).data()).second);
    return std::acos(clamp_dot(worst));
}

struct AnalyzeOptions {
    long grid_points = 0; // 0 selects default_mesh_grid(q)
};

inline CenterSet analyze_centers(int n, const Mat& points, const AnalyzeOptions& opt = {})
{
    require(n >= 1 && points.rows() == n + 1, "analyze_centers: coordinate dimension must be n+1");
    require(points.cols() >= 2, "analyze_centers: need at least two points");
    for (int i = 0; i < points.cols(); ++i)
        require(std::abs(points.col(i).norm() - 1.0) < 1e-12, "analyze_centers: points must be unit vectors");
    CenterSet cs;
    cs.n = n;
    cs.points = points;
    cs.q = separation_radius(points);
    if (2.0 * cs.q < 1e-12)
        fail(ErrorCode::DuplicatePoints, "two centers closer than 1e-12 rad");
    if (n == 1) {
        cs.h = circle_mesh_norm(points);
        cs.grid_points = 0;
    } else if (n == 2) {
        const long M = opt.grid_points > 0 ? opt.grid_points : default_mesh_grid(cs.q);
        cs.h = grid_mesh_norm(points, fibonacci_points(static_cast<int>(M)));
        cs.grid_points = M;
    } else {
        const long M = opt.grid_points > 0 ? opt.grid_points : 200000;
        cs.h = grid_mesh_norm(points, uniform_random_points(n, static_cast<int>(M), 12345));
        cs.grid_points = M;
    }
    cs.h = std::max(cs.h, cs.q);
    cs.rho = cs.h / cs.q;
    return cs;
}

// One center: the farthest point is the antipode, and q is taken equal to h.
inline CenterSet single_center(int n, const Vec& x)
{
    require(n >= 1 && x.size() == n + 1, "single_center: coordinate dimension must be n+1");
    require(std::abs(x.norm() - 1.0) < 1e-12, "single_center: point must be a unit vector");
    CenterSet cs;
    cs.n = n;
    cs.points = x;
    cs.q = cs.h = pi;
    cs.rho = 1.0;
    return cs;
}

// Greedy maximin refinement. Each level inserts the candidate farthest from
// the current set until the mesh norm (measured on the candidate grid) halves.
struct RefineOptions {
    long candidates = 0;  // S^2 candidate grid size; 0 picks one from the target h
    long max_inserts = 200000;
};

inline std::vector<CenterSet> refine_nested(const CenterSet& base, int levels, double rho_cap,
                                            const RefineOptions& opt = {})
{
    require(rho_cap >= 2.0, "refine_nested: rho_cap must be at least 2");
    require(levels >= 0, "refine_nested: levels must be non-negative");
    std::vector<CenterSet> out{base};
    if (levels == 0)
        return out;
    const int n = base.n;
    if (n == 1) {
        std::vector<Vec> pts;
        for (int i = 0; i < base.size(); ++i)
            pts.push_back(base.points.col(i));
        double h = circle_mesh_norm(base.points);
        for (int lev = 0; lev < levels; ++lev) {
            const double target = 0.5 * h;
            long inserted = 0;
            for (;;) {
                Mat P(2, pts.size());
                for (size_t i = 0; i < pts.size(); ++i)
                    P.col(i) = pts[i];
                auto a = circle_angles(P);
                std::vector<int> ord(a.size());
                std::iota(ord.begin(), ord.end(), 0);
                std::stable_sort(ord.begin(), ord.end(), [&](int x, int y) { return a[x] < a[y]; });
                double best_gap = -1.0, best_mid = 0.0;
                for (size_t k = 0; k < ord.size(); ++k) {
                    const double a0 = a[ord[k]];
                    const double a1 = k + 1 < ord.size() ? a[ord[k + 1]] : a[ord[0]] + 2.0 * pi;
                    if (a1 - a0 > best_gap + 1e-14) {
                        best_gap = a1 - a0;
                        best_mid = 0.5 * (a0 + a1);
                    }
                }
                if (0.5 * best_gap <= target * (1.0 + 1e-12))
                    break;
                Vec v(2);
                v << std::cos(best_mid), std::sin(best_mid);
                pts.push_back(v);
                if (++inserted > opt.max_inserts)
                    fail(ErrorCode::RefinementStall, "insertion budget exhausted");
            }
            Mat P(2, pts.size());
            for (size_t i = 0; i < pts.size(); ++i)
                P.col(i) = pts[i];
            CenterSet cs = analyze_centers(1, P);
            if (cs.rho > rho_cap)
                fail(ErrorCode::RefinementStall, "mesh ratio exceeded the cap");
            h = cs.h;
            out.push_back(std::move(cs));
        }
        return out;
    }
    require(n == 2, "refine_nested supports n = 1, 2");

    double target_h = base.h / std::pow(2.0, levels);
    long M = opt.candidates;
    if (M <= 0) {
        const double spacing = target_h / 5.0;
        M = std::clamp(static_cast<long>(4.0 * pi / (spacing * spacing)), 20000L, 600000L);
    }
    const Mat cand = fibonacci_points(static_cast<int>(M));
    std::vector<double> best(M, -1.0); // max dot with the current set
    Mat current = base.points;
    for (int i = 0; i < current.cols(); ++i) {
        const Vec c = current.col(i);
        for (long g = 0; g < M; ++g)
            best[g] = std::max(best[g], cand.col(g).dot(c));
    }
    auto grid_h = [&]() {
        double worst = 1.0;
        long arg = 0;
        for (long g = 0; g < M; ++g)
            if (best[g] < worst) {
                worst = best[g];
                arg = g;
            }
        return std::pair<double, long>{std::acos(clamp_dot(worst)), arg};
    };
    double h = grid_h().first;
    out[0].h = h;
    out[0].rho = h / out[0].q;
    out[0].grid_points = M;
    std::vector<Vec> added;
    long inserted = 0;
    for (int lev = 0; lev < levels; ++lev) {
        const double target = 0.5 * h;
        for (;;) {
            auto [hc, arg] = grid_h();
            if (hc <= target)
                break;
            const Vec c = cand.col(arg);
            added.push_back(c);
            for (long g = 0; g < M; ++g)
                best[g] = std::max(best[g], cand.col(g).dot(c));
            if (++inserted > opt.max_inserts)
                fail(ErrorCode::RefinementStall, "insertion budget exhausted");
        }
        Mat P(3, base.size() + added.size());
        P.leftCols(base.size()) = base.points;
        for (size_t i = 0; i < added.size(); ++i)
            P.col(base.size() + i) = added[i];
        CenterSet cs;
        cs.n = 2;
        cs.points = P;
        cs.q = separation_radius(P);
        if (2.0 * cs.q < 1e-12)
            fail(ErrorCode::RefinementStall, "candidate grid too coarse for the requested depth");
        cs.h = std::max(grid_h().first, cs.q);
        cs.rho = cs.h / cs.q;
        cs.grid_points = M;
        if (cs.rho > rho_cap)
            fail(ErrorCode::RefinementStall, "mesh ratio exceeded the cap");
        h = cs.h;
        out.push_back(std::move(cs));
    }
    return out;
}

// Product grid for integration over S^n (n = 1, 2): rings in z = cos(theta)
// with Gauss-Legendre weights times equispaced azimuths.
struct SphereGrid {
    int n = 2;
    Mat points;
    std::vector<double> weights;
    std::vector<double> ring_z;
    std::vector<double> ring_w;
    int nphi = 0;

    long size() const { return static_cast<long>(points.cols()); }
};

inline SphereGrid make_sphere_grid(int n, int rings, int nphi)
{
    SphereGrid g;
    g.n = n;
    g.nphi = nphi;
    if (n == 1) {
        g.points = equispaced_circle(nphi);
        g.weights.assign(nphi, 2.0 * pi / nphi);
        return g;
    }
    require(n == 2, "make_sphere_grid supports n = 1, 2");
    auto gl = gauss_legendre<double>(rings);
    g.ring_z = gl.x;
    g.ring_w = gl.w;
    g.points.resize(3, static_cast<long>(rings) * nphi);
    g.weights.resize(static_cast<size_t>(rings) * nphi);
    long k = 0;
    for (int r = 0; r < rings; ++r) {
        const double z = gl.x[r];
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < nphi; ++j, ++k) {
            const double phi = 2.0 * pi * j / nphi;
            g.points(0, k) = s * std::cos(phi);
            g.points(1, k) = s * std::sin(phi);
            g.points(2, k) = z;
            g.weights[k] = gl.w[r] * 2.0 * pi / nphi;
        }
    }
    return g;
}

// Grid exact for polynomials of degree <= D.
inline SphereGrid exact_grid(int n, int D)
{
    D = std::max(D, 0);
    if (n == 1)
        return make_sphere_grid(1, 0, D + 1);
    return make_sphere_grid(2, D / 2 + 1, D + 1);
}

struct CellDecomposition {
    std::vector<double> cell_measure;
    double partition_norm = 0.0;
    long grid_points = 0;
};

inline double cell_measure_lower_constant(int n)
{
    return sphere_volume(n - 1) * std::pow(2.0 / pi, n - 1) / n;
}

inline std::vector<double> voronoi_areas(const CenterSet& cs);

// Voronoi cells. On S^1 the cells are exact arcs; on S^2 they are counted on
// a grid with grid_resolution rings and twice as many azimuths.
inline CellDecomposition build_cells(const CenterSet& cs, int grid_resolution)
{
    require(grid_resolution >= 4, "build_cells: grid_resolution too small");
    if (cs.n == 1) {
        CellDecomposition cd;
        cd.cell_measure = voronoi_areas(cs);
        cd.partition_norm = *std::max_element(cd.cell_measure.begin(), cd.cell_measure.end());
        return cd;
    }
    const SphereGrid g = make_sphere_grid(cs.n, grid_resolution, 2 * grid_resolution);
    const int N = cs.size();
    CellDecomposition cd;
    cd.grid_points = g.size();
    cd.cell_measure.assign(N, 0.0);
    std::vector<std::vector<long>> members(N);
    std::vector<int> owner(g.size());
    BandIndex idx(cs.points);
    for (long k = 0; k < g.size(); ++k) {
        const int o = idx.nearest(g.points.col(k).data()).first;
        owner[k] = o;
        cd.cell_measure[o] += g.weights[k];
        members[o].push_back(k);
    }
    for (int i = 0; i < N; ++i)
        if (members[i].empty())
            fail(ErrorCode::EmptyCell, "center " + std::to_string(i) + " received no grid points");
    // Diameter per cell by iterated farthest-point sweeps over its members.
    double diam = 0.0;
    for (int i = 0; i < N; ++i) {
        auto farthest = [&](const Vec& from) {
            double md = 2.0;
            long arg = members[i][0];
            for (long k : members[i]) {
                const double d = g.points.col(k).dot(from);
                if (d < md) {
                    md = d;
                    arg = k;
                }
            }
            return std::pair<long, double>{arg, md};
        };
        Vec a = g.points.col(farthest(cs.points.col(i)).first);
        double local = 0.0;
        for (int it = 0; it < 3; ++it) {
            auto [b, d] = farthest(a);
            local = std::max(local, std::acos(clamp_dot(d)));
            a = g.points.col(b);
        }
        diam = std::max(diam, local);
    }
    cd.partition_norm = diam;
    return cd;
}

// Exact Voronoi cell areas. On S^1 these are the arcs between midpoints; on
// S^2 each cell is clipped in the gnomonic chart about its center and its
// area summed from spherical triangles.
inline std::vector<double> voronoi_areas(const CenterSet& cs)
{
    const int N = cs.size();
    std::vector<double> area(N, 0.0);
    if (cs.n == 1) {
        auto a = circle_angles(cs.points);
        std::vector<int> ord(N);
        std::iota(ord.begin(), ord.end(), 0);
        std::stable_sort(ord.begin(), ord.end(), [&](int x, int y) { return a[x] < a[y]; });
        for (int k = 0; k < N; ++k) {
            const double prev = k > 0 ? a[ord[k - 1]] : a[ord[N - 1]] - 2.0 * pi;
            const double next = k + 1 < N ? a[ord[k + 1]] : a[ord[0]] + 2.0 * pi;
            area[ord[k]] = 0.5 * (next - prev);
        }
        return area;
    }
    require(cs.n == 2, "voronoi_areas supports n = 1, 2");
    for (int i = 0; i < N; ++i) {
        const Eigen::Vector3d xi = cs.points.col(i);
        Eigen::Vector3d e1 = std::abs(xi(0)) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
        e1 = (e1 - e1.dot(xi) * xi).normalized();
        const Eigen::Vector3d e2 = xi.cross(e1);
        // Start from a large square; every bisector half-plane contains the origin.
        const double B = 1e3;
        std::vector<Eigen::Vector2d> poly{{-B, -B}, {B, -B}, {B, B}, {-B, B}};
        for (int j = 0; j < N && !poly.empty(); ++j) {
            if (j == i)
                continue;
            const Eigen::Vector3d nrm = xi - Eigen::Vector3d(cs.points.col(j));
            // (xi + u e1 + v e2) . nrm >= 0
            const double c0 = xi.dot(nrm), cu = e1.dot(nrm), cv = e2.dot(nrm);
            std::vector<Eigen::Vector2d> next;
            const size_t m = poly.size();
            for (size_t k = 0; k < m; ++k) {
                const Eigen::Vector2d& P = poly[k];
                const Eigen::Vector2d& Q = poly[(k + 1) % m];
                const double fp = c0 + cu * P(0) + cv * P(1);
                const double fq = c0 + cu * Q(0) + cv * Q(1);
                if (fp >= 0)
                    next.push_back(P);
                if ((fp >= 0) != (fq >= 0)) {
                    const double s = fp / (fp - fq);
                    next.push_back(P + s * (Q - P));
                }
            }
            poly.swap(next);
        }
        bool bounded = true;
        for (const auto& v : poly)
            if (v.cwiseAbs().maxCoeff() > 0.5 * B)
                bounded = false;
        if (!bounded)
            fail(ErrorCode::EmptyCell, "Voronoi cell not contained in an open hemisphere");
        double A = 0.0;
        const size_t m = poly.size();
        for (size_t k = 0; k < m; ++k) {
            const Eigen::Vector3d b = (xi + poly[k](0) * e1 + poly[k](1) * e2).normalized();
            const Eigen::Vector3d c = (xi + poly[(k + 1) % m](0) * e1 + poly[(k + 1) % m](1) * e2).normalized();
            const double num = std::abs(xi.dot(b.cross(c)));
            const double den = 1.0 + xi.dot(b) + b.dot(c) + c.dot(xi);
            A += 2.0 * std::atan2(num, den);
        }
        area[i] = A;
    }
    return area;
}

// Center-set text format: "n N" then one point per line, 17 significant digits.
inline std::string format_centers(const CenterSet& cs)
{
    std::ostringstream os;
    os << cs.n << ' ' << cs.size() << '\n';
    char buf[64];
    for (int i = 0; i < cs.size(); ++i) {
        for (int r = 0; r <= cs.n; ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", cs.points(r, i));
            os << (r ? " " : "") << buf;
        }
        os << '\n';
    }
    return os.str();
}

inline Mat parse_centers(std::istream& is, int& n)
{
    int N = 0;
    if (!(is >> n >> N) || n < 1 || N < 1)
        throw std::invalid_argument("center file: bad header");
    Mat P(n + 1, N);
    for (int i = 0; i < N; ++i) {
        for (int r = 0; r <= n; ++r)
            if (!(is >> P(r, i)))
                throw std::invalid_argument("center file: truncated at point " + std::to_string(i));
        const double s = P.col(i).norm();
        if (!(std::abs(s - 1.0) < 1e-10))
            throw std::invalid_argument("center file: point " + std::to_string(i) + " is not a unit vector");
        P.col(i) /= s;
    }
    return P;
}

inline Mat read_centers_file(const std::string& path, int& n)
{
    std::ifstream f(path);
    if (!f)
        throw std::invalid_argument("centers file not found: " + path);
    return parse_centers(f, n);
}

} // namespace sbf
