#include "fk/shapeopt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>
#include <string_view>
#include <thread>
#include <unordered_set>

#include "fk/geodesic.hpp"

namespace fk {

std::string to_string(InitKind k) { return k == InitKind::ball ? "ball" : "random_blob"; }

InitKind init_kind_from_string(const std::string& s)
{
    if (s == "ball")
        return InitKind::ball;
    if (s == "random_blob")
        return InitKind::random_blob;
    throw std::invalid_argument("unknown init '" + s + "' (expected ball or random_blob)");
}

double evaluate_J(const DiscreteOperatorPair& ops, const Field& w, double lambda_target)
{
    return dirichlet_energy(ops, w) - lambda_target * mass_norm2(ops, w);
}

double evaluate_J(const MetricChart& chart, const Grid& grid, const Field& w, double lambda_target)
{
    return evaluate_J(assemble_operators(chart, grid), w, lambda_target);
}

Indicator volume_threshold(const Field& cell_vol, const Field& u, double m)
{
    const std::size_t N = static_cast<std::size_t>(u.size());
    if (static_cast<std::size_t>(cell_vol.size()) != N)
        throw std::invalid_argument("volume_threshold: field and cell volumes differ in size");
    const double total = cell_vol.sum();
    if (!(m > 0.0) || !(m < total))
        throw std::invalid_argument("volume_threshold: m must lie strictly between 0 and " +
                                    std::to_string(total));
    if (!u.allFinite() || !(u.maxCoeff() > 0.0))
        throw std::invalid_argument("volume_threshold: field has no positive values");
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    Indicator s(N, 0);
    double acc = 0.0;
    std::size_t k = 0;
    while (k < N && acc + cell_vol[order[k]] < m)
        acc += cell_vol[order[k++]];
    if (k < N && acc + cell_vol[order[k]] - m <= m - acc)
        ++k;
    for (std::size_t i = 0; i < k; ++i)
        s[order[i]] = 1;
    return s;
}

Indicator volume_threshold(const MetricChart& chart, const Grid& grid, const Field& u, double m)
{
    return volume_threshold(cell_volumes(chart, grid), u, m);
}

Indicator dilate(const Grid& grid, const Indicator& s, int rings)
{
    Indicator cur = s;
    for (int k = 0; k < rings; ++k) {
        Indicator next = cur;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            if (!cur[p])
                continue;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    if (auto q = grid.neighbor(p, di, dj))
                        next[*q] = 1;
        }
        cur.swap(next);
    }
    return cur;
}

Indicator erode(const Grid& grid, const Indicator& s, int rings)
{
    Indicator inv(s.size());
    for (std::size_t p = 0; p < s.size(); ++p)
        inv[p] = s[p] ? 0 : 1;
    inv = dilate(grid, inv, rings);
    // off-grid neighbours of non-periodic edges count as outside
    Indicator out(s.size(), 0);
    for (std::size_t p = 0; p < s.size(); ++p) {
        if (!s[p] || inv[p])
            continue;
        bool keep = true;
        for (int di = -rings; di <= rings && keep; ++di)
            for (int dj = -rings; dj <= rings && keep; ++dj)
                if (!grid.neighbor(p, di, dj))
                    keep = false;
        out[p] = keep ? 1 : 0;
    }
    return out;
}

double symmetric_difference(const Field& cell_vol, const Indicator& a, const Indicator& b)
{
    double v = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        if ((a[p] != 0) != (b[p] != 0))
            v += cell_vol[p];
    return v;
}

namespace {

std::string_view key(const Indicator& s)
{
    return {reinterpret_cast<const char*>(s.data()), s.size()};
}

void check_support_margin(const Grid& grid, const Indicator& s, int margin)
{
    if (margin <= 0)
        return;
    for (std::size_t p = 0; p < s.size(); ++p)
        if (s[p] && grid.near_truncation(p, margin)) {
            auto [i, j] = grid.ij(p);
            throw TruncationError("support comes within " + std::to_string(margin) +
                                  " cells of the truncation boundary at node (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ")");
        }
}

Point chart_center(const MetricChart& chart)
{
    return {0.5 * (chart.lo(0) + chart.hi(0)), 0.5 * (chart.lo(1) + chart.hi(1))};
}

// nodes of s with a 4-neighbour of the other phase (inside == true) or
// nodes outside s with a 4-neighbour inside (inside == false)
std::vector<std::size_t> rim(const Grid& grid, const Indicator& s, bool inside)
{
    std::vector<std::size_t> out;
    constexpr int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (std::size_t p = 0; p < s.size(); ++p) {
        if ((s[p] != 0) != inside)
            continue;
        for (const auto& d : nb) {
            auto q = grid.neighbor(p, d[0], d[1]);
            if (q && (s[*q] != 0) != inside) {
                out.push_back(p);
                break;
            }
        }
    }
    return out;
}

// Score whose superlevel sets move the boundary of S along its outward
// normal by tau (V - mean V) / mean V, V = |grad u|^2 at the inner rim.
// Signed distance (positive inside) comes from Dijkstra over the
// 8-neighbourhood with metric edge lengths; every node carries the speed of
// the rim node it was reached from.
Field advect_score(const MetricChart& chart, const Grid& grid, const Indicator& S, const Field& u,
                   double tau, double reach)
{
    const std::size_t N = grid.size();
    const double inf = std::numeric_limits<double>::infinity();
    Field dist = Field::Constant(static_cast<Eigen::Index>(N), inf);
    Field speed = Field::Zero(static_cast<Eigen::Index>(N));
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    auto half = [&](std::size_t p, int a) {
        return 0.5 * std::sqrt(chart.g(grid.node(p))(a, a)) * grid.h(a);
    };
    constexpr int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    double vsum = 0.0;
    int vcount = 0;
    for (std::size_t p = 0; p < N; ++p) {
        if (!S[p])
            continue;
        double v = -1.0;
        for (const auto& d : nb) {
            auto q = grid.neighbor(p, d[0], d[1]);
            if (!q || S[*q])
                continue;
            const int a = d[0] != 0 ? 0 : 1;
            const double hp = half(p, a);
            v = std::max(v, u[p] * u[p] / (hp * hp));
            if (hp < dist[p])
                dist[p] = hp;
        }
        if (v >= 0.0) {
            speed[p] = v;
            vsum += v;
            ++vcount;
            heap.emplace(dist[p], p);
        }
    }
    if (vcount == 0)
        return indicator_field(S);
    // average the staircase-noisy rim speeds over a few cells along the rim
    {
        std::vector<std::size_t> rimv;
        for (std::size_t p = 0; p < N; ++p)
            if (S[p] && dist[p] < inf)
                rimv.push_back(p);
        Field smooth(static_cast<Eigen::Index>(rimv.size()));
        for (std::size_t a = 0; a < rimv.size(); ++a) {
            const Point xa = grid.node(rimv[a]);
            const Mat2 G = chart.g(xa);
            const double w = 3.0 * std::max(std::sqrt(G(0, 0)) * grid.h(0),
                                            std::sqrt(G(1, 1)) * grid.h(1));
            double acc = 0.0;
            int cnt = 0;
            for (std::size_t b = 0; b < rimv.size(); ++b) {
                const Point d = chart.displacement(xa, grid.node(rimv[b]));
                if (d.dot(G * d) <= w * w) {
                    acc += speed[rimv[b]];
                    ++cnt;
                }
            }
            smooth[static_cast<Eigen::Index>(a)] = acc / cnt;
        }
        for (std::size_t a = 0; a < rimv.size(); ++a)
            speed[rimv[a]] = smooth[static_cast<Eigen::Index>(a)];
    }
    const double vbar = vsum / vcount;
    for (std::size_t p = 0; p < N; ++p) {
        if (!S[p] || speed[p] == 0.0)
            continue;
        for (const auto& d : nb) {
            auto q = grid.neighbor(p, d[0], d[1]);
            if (!q || S[*q])
                continue;
            const double hq = half(*q, d[0] != 0 ? 0 : 1);
            if (hq < dist[*q] || (hq == dist[*q] && speed[p] > speed[*q])) {
                dist[*q] = hq;
                speed[*q] = speed[p];
                heap.emplace(hq, *q);
            }
        }
    }
    std::vector<std::uint8_t> done(N, 0);
    while (!heap.empty()) {
        auto [d, p] = heap.top();
        heap.pop();
        if (done[p] || d > dist[p])
            continue;
        done[p] = 1;
        if (d > reach)
            break;
        const Mat2 G = chart.g(grid.node(p));
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0)
                    continue;
                auto q = grid.neighbor(p, di, dj);
                if (!q || done[*q] || S[*q] != S[p])
                    continue;
                const Point e(di * grid.h(0), dj * grid.h(1));
                const double nd = d + std::sqrt(e.dot(G * e));
                if (nd < dist[*q]) {
                    dist[*q] = nd;
                    speed[*q] = speed[p];
                    heap.emplace(nd, *q);
                }
            }
    }
    Field score(static_cast<Eigen::Index>(N));
    for (std::size_t p = 0; p < N; ++p) {
        const double sd = std::min(dist[p], reach + tau) * (S[p] ? 1.0 : -1.0);
        const double shift = std::isfinite(dist[p]) && dist[p] <= reach
                                  ? tau * (speed[p] - vbar) / vbar
                                  : 0.0;
        score[p] = sd + shift;
    }
    return score;
}

} // namespace

Indicator initial_support(const MetricChart& chart, const Grid& grid, double m,
                          const ShapeOptions& opts)
{
    const Point c = opts.center.value_or(chart_center(chart));
    if (opts.init == InitKind::ball)
        return ball_radius_for_volume(chart, grid, c, m, opts.truncation_margin).support;

    // sum of a few seeded Gaussian bumps around c, thresholded to volume m
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Mat2 g0 = chart.g(c);
    const double r0 = std::sqrt(m / std::numbers::pi);
    struct Bump {
        Point x;
        double sigma;
        double amp;
    };
    std::vector<Bump> bumps(4);
    for (auto& b : bumps) {
        const double rho = r0 * unif(rng);
        const double ang = 2.0 * std::numbers::pi * unif(rng);
        b.x = c + Point(rho * std::cos(ang) / std::sqrt(g0(0, 0)),
                        rho * std::sin(ang) / std::sqrt(g0(1, 1)));
        b.x = chart.wrap(b.x);
        b.sigma = r0 * (0.4 + 0.6 * unif(rng));
        b.amp = 0.5 + 0.5 * unif(rng);
    }
    Field score = Field::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const Point x = grid.node(p);
        for (const auto& b : bumps) {
            const Point d = chart.displacement(b.x, x);
            const double d2 = d.dot(g0 * d);
            score[p] += b.amp * std::exp(-0.5 * d2 / (b.sigma * b.sigma));
        }
    }
    auto s = volume_threshold(chart, grid, score, m);
    check_support_margin(grid, s, opts.truncation_margin);
    return s;
}

ShapeResult fk_minimize(const MetricChart& chart, const Grid& grid,
                        const DiscreteOperatorPair& ops, double m, const ShapeOptions& opts)
{
    const Field& vol = ops.M;
    const double total = vol.sum();
    if (!(m > 0.0) || !(m < total))
        throw std::invalid_argument("fk_minimize: m must lie strictly between 0 and the total volume");
    if (opts.damping < 0.0 || opts.damping >= 1.0)
        throw std::invalid_argument("fk_minimize: damping must lie in [0, 1)");

    EigenOptions eo;
    eo.tol = opts.eig_tol;
    eo.seed = opts.seed;
    eo.inner = opts.inner;

    ShapeResult res;
    res.m = m;
    auto solve = [&](const Indicator& s) {
        ++res.eigensolves;
        return smallest_eigenpair(ops, s, eo);
    };

    Indicator S = initial_support(chart, grid, m, opts);
    check_support_margin(grid, S, opts.truncation_margin);
    SpectralPair cur = solve(S);
    res.trace.push_back({cur.lambda, indicator_volume(vol, S), 0.0, true, "init"});

    std::unordered_set<std::string> seen;
    seen.emplace(key(S));
    const double max_cell = vol.maxCoeff();

    auto accept = [&](Indicator T, SpectralPair p, const char* step) {
        check_support_margin(grid, T, opts.truncation_margin);
        const double change = symmetric_difference(vol, S, T);
        S = std::move(T);
        cur = std::move(p);
        res.trace.push_back({cur.lambda, indicator_volume(vol, S), change, true, step});
    };
    auto reject = [&](const Indicator& T, const SpectralPair& p, const char* step) {
        res.trace.push_back(
            {p.lambda, indicator_volume(vol, T), symmetric_difference(vol, S, T), false, step});
    };

    int band = std::max(1, opts.band);
    bool fixed = false;
    int it = 0;
    // try one candidate support; true when it lowers lambda and is accepted
    auto attempt = [&](Indicator T, const char* step) {
        if (!seen.emplace(key(T)).second)
            return false;
        SpectralPair p = solve(T);
        if (p.lambda <= cur.lambda) {
            accept(std::move(T), std::move(p), step);
            return true;
        }
        reject(T, p, step);
        return false;
    };
    const double hphys = physical_spacing(chart, grid, grid.node(support_barycenter(chart, grid, S)));
    for (; it < opts.max_iter; ++it) {
        const Field ud = solve(dilate(grid, S, band)).u;
        bool moved = attempt(volume_threshold(vol, ud, m), "threshold");
        if (!moved) {
            Field score = (1.0 - opts.damping) * ud / ud.maxCoeff();
            for (std::size_t q = 0; q < S.size(); ++q)
                if (S[q])
                    score[q] += opts.damping;
            moved = attempt(volume_threshold(vol, score, m), "damped");
        }
        if (!moved) {
            const double tau = std::min(band, 4) * hphys;
            moved = attempt(volume_threshold(vol, advect_score(chart, grid, S, cur.u, tau,
                                                               3.0 * tau + 4.0 * hphys),
                                             m),
                            "advect");
        }
        if (moved) {
            band = std::min(std::max(1, opts.band), 2 * band);
        } else {
            if (band == 1) {
                fixed = true;
                break;
            }
            band = std::max(1, band / 2);
        }
    }

    bool polished = true;
    if (fixed && opts.polish) {
        int evals = 0;
        const int k = std::max(1, opts.polish_candidates);
        for (;;) {
            const Field ud = solve(dilate(grid, S, 3)).u;
            auto inner = rim(grid, S, true);
            auto outer = rim(grid, S, false);
            std::stable_sort(inner.begin(), inner.end(),
                             [&](std::size_t a, std::size_t b) { return cur.u[a] < cur.u[b]; });
            std::stable_sort(outer.begin(), outer.end(),
                             [&](std::size_t a, std::size_t b) { return ud[a] > ud[b]; });
            inner.resize(std::min<std::size_t>(inner.size(), k));
            outer.resize(std::min<std::size_t>(outer.size(), k));
            const double vS = indicator_volume(vol, S);
            bool improved = false;
            for (std::size_t a : inner) {
                for (std::size_t b : outer) {
                    const double vT = vS - vol[a] + vol[b];
                    if (std::abs(vT - m) > 0.5 * max_cell)
                        continue;
                    Indicator T = S;
                    T[a] = 0;
                    T[b] = 1;
                    if (!seen.emplace(key(T)).second)
                        continue;
                    if (++evals > opts.polish_max_evals) {
                        polished = false;
                        break;
                    }
                    SpectralPair p = solve(T);
                    if (p.lambda < cur.lambda * (1.0 - 1e-12)) {
                        accept(std::move(T), std::move(p), "swap");
                        improved = true;
                        break;
                    }
                }
                if (improved || !polished)
                    break;
            }
            if (!improved)
                break;
        }
    }

    res.support = S;
    res.volume = indicator_volume(vol, S);
    res.lambda1 = cur.lambda;
    res.lambda_target = cur.lambda;
    res.u = cur.u;
    res.iterations = it;
    res.converged = fixed && polished;
    return res;
}

ShapeResult fk_minimize(const MetricChart& chart, const Grid& grid, double m,
                        const ShapeOptions& opts)
{
    return fk_minimize(chart, grid, assemble_operators(chart, grid), m, opts);
}

std::vector<ProfileEntry> fk_profile(const MetricChart& chart, const Grid& grid,
                                     const std::vector<double>& volumes, const ShapeOptions& opts,
                                     int threads)
{
    const double total = cell_volumes(chart, grid).sum();
    for (double m : volumes)
        if (!(m > 0.0) || !(m < total))
            throw std::invalid_argument("fk_profile: volume " + std::to_string(m) +
                                        " is outside (0, total volume)");
    const auto ops = assemble_operators(chart, grid);
    std::vector<ProfileEntry> out(volumes.size());
    std::vector<std::exception_ptr> errors(volumes.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k; (k = next++) < volumes.size();) {
            try {
                out[k].m = volumes[k];
                out[k].result = fk_minimize(chart, grid, ops, volumes[k], opts);
                out[k].fk = out[k].result.lambda1;
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int nt = std::clamp<int>(threads, 1, static_cast<int>(std::max<std::size_t>(1, volumes.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

std::size_t support_barycenter(const MetricChart& chart, const Grid& grid, const Indicator& s)
{
    const Field vol = cell_volumes(chart, grid);
    double w = 0.0;
    if (chart.embedding()) {
        const auto& emb = *chart.embedding();
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (std::size_t p = 0; p < s.size(); ++p)
            if (s[p]) {
                c += vol[p] * emb(grid.node(p));
                w += vol[p];
            }
        if (!(w > 0.0))
            throw std::invalid_argument("barycenter of an empty support");
        c /= w;
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const double d = (emb(grid.node(p)) - c).squaredNorm();
            if (d < bd) {
                bd = d;
                best = p;
            }
        }
        return best;
    }
    double sx[2] = {0, 0}, cx[2] = {0, 0}, mx[2] = {0, 0};
    for (std::size_t p = 0; p < s.size(); ++p) {
        if (!s[p])
            continue;
        const Point x = grid.node(p);
        for (int a = 0; a < 2; ++a) {
            const double ang = 2.0 * std::numbers::pi * (x[a] - chart.lo(a)) / chart.length(a);
            sx[a] += vol[p] * std::sin(ang);
            cx[a] += vol[p] * std::cos(ang);
            mx[a] += vol[p] * x[a];
        }
        w += vol[p];
    }
    if (!(w > 0.0))
        throw std::invalid_argument("barycenter of an empty support");
    Point b;
    for (int a = 0; a < 2; ++a) {
        if (chart.periodic(a))
            b[a] = chart.lo(a) + chart.length(a) * std::atan2(sx[a], cx[a]) / (2.0 * std::numbers::pi);
        else
            b[a] = mx[a] / w;
    }
    return grid.nearest(chart.wrap(b));
}

double ball_deviation(const MetricChart& chart, const Grid& grid, const Indicator& s, double m)
{
    const std::size_t c = support_barycenter(chart, grid, s);
    const auto fit = ball_radius_for_volume(chart, grid, grid.node(c), m, 0);
    return symmetric_difference(cell_volumes(chart, grid), s, fit.support) / m;
}

} // namespace fk
