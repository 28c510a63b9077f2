#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fk/geodesic.hpp"
#include "fk/shapeopt.hpp"

namespace fk {

namespace {

struct Candidate {
    std::string kind;
    Field v;
};

Field clamp_nonneg(Field v) { return v.cwiseMax(0.0); }

Indicator support_of(const Field& v)
{
    Indicator s(static_cast<std::size_t>(v.size()));
    for (Eigen::Index p = 0; p < v.size(); ++p)
        s[static_cast<std::size_t>(p)] = v[p] != 0.0 ? 1 : 0;
    return s;
}

} // namespace

PenalizationReport penalization_certificate(const MetricChart& chart, const Grid& grid,
                                            const DiscreteOperatorPair& ops,
                                            const ShapeResult& result,
                                            std::optional<double> mu_star, int n_candidates,
                                            std::uint64_t seed, double rel_tol)
{
    if (n_candidates < 1)
        throw std::invalid_argument("penalization_certificate: need at least one candidate");
    const Field& vol = ops.M;
    const Field& u = result.u;
    const double m = result.m;
    const double lam = result.lambda_target;
    const double lhs = dirichlet_energy(ops, u);
    const double umax = u.maxCoeff();

    EigenOptions eo;
    eo.seed = seed;
    auto ground = [&](const Indicator& s) { return smallest_eigenpair(ops, s, eo).u; };

    std::map<int, Field> dilated, eroded;
    auto dilated_u = [&](int k) -> const Field& {
        auto it = dilated.find(k);
        if (it == dilated.end())
            it = dilated.emplace(k, ground(dilate(grid, result.support, k))).first;
        return it->second;
    };
    auto eroded_u = [&](int k) -> const Field& {
        auto it = eroded.find(k);
        if (it == eroded.end()) {
            auto s = erode(grid, result.support, k);
            if (std::none_of(s.begin(), s.end(), [](auto b) { return b != 0; }))
                throw std::invalid_argument("erosion emptied the support");
            it = eroded.emplace(k, ground(s)).first;
        }
        return it->second;
    };

    std::vector<std::size_t> inside, rim_in, rim_out;
    {
        const Indicator d = dilate(grid, result.support, 3);
        const Indicator e = erode(grid, result.support, 1);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            if (result.support[p])
                (e[p] ? inside : rim_in).push_back(p);
            else if (d[p])
                rim_out.push_back(p);
        }
    }
    const std::size_t centre = support_barycenter(chart, grid, result.support);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto pick = [&](const std::vector<std::size_t>& v) {
        return v[std::min(v.size() - 1, static_cast<std::size_t>(unif(rng) * v.size()))];
    };

    auto bump = [&](std::size_t p0, double radius_cells, double amp) {
        Field v = u;
        const int R = static_cast<int>(std::ceil(radius_cells));
        for (int di = -R; di <= R; ++di)
            for (int dj = -R; dj <= R; ++dj) {
                auto q = grid.neighbor(p0, di, dj);
                if (!q)
                    continue;
                const double t = 1.0 - std::hypot(di, dj) / radius_cells;
                if (t > 0.0)
                    v[*q] += amp * t;
            }
        return clamp_nonneg(v);
    };

    constexpr int kKinds = 10;
    auto make = [&](int c) -> Candidate {
        if (c == 0)
            return {"self", u};
        switch (c % kKinds) {
        case 0:
            return {"dilate", dilated_u(1 + static_cast<int>(unif(rng) * 3))};
        case 1:
            return {"erode", eroded_u(1 + static_cast<int>(unif(rng) * 3))};
        case 2: {
            // volume-m ball about a random node near the support
            const std::size_t p = pick(unif(rng) < 0.5 ? inside : rim_out);
            auto fit = ball_radius_for_volume(chart, grid, grid.node(p), m, 1);
            return {"translated_ball", ground(fit.support)};
        }
        case 3: {
            const double f = 0.9 + 0.2 * unif(rng);
            auto fit = ball_radius_for_volume(chart, grid, grid.node(centre), f * m, 1);
            return {"ball_volume", ground(fit.support)};
        }
        case 4:
            return {"bump_inside", bump(pick(inside), 2.0 + 3.0 * unif(rng),
                                        umax * (0.4 * unif(rng) - 0.2))};
        case 5:
            return {"bump_boundary", bump(pick(rim_in), 1.5 + 2.5 * unif(rng),
                                          umax * (0.2 * unif(rng) - 0.05))};
        case 6:
            return {"bump_outside", bump(pick(rim_out), 1.5 + 2.5 * unif(rng),
                                         umax * 0.1 * unif(rng))};
        case 7:
            return {"rescale", (0.8 + 0.4 * unif(rng)) * u};
        case 8:
            return {"rescale_dilate",
                    (0.8 + 0.4 * unif(rng)) * dilated_u(1 + static_cast<int>(unif(rng) * 3))};
        default: {
            const std::size_t p = pick(rim_in);
            auto fit = ball_radius_for_volume(chart, grid, grid.node(p), m, 1);
            return {"rescale_ball", (0.8 + 0.4 * unif(rng)) * ground(fit.support)};
        }
        }
    };

    struct Row {
        int id;
        std::string kind;
        double base; // E(v) + lambda [1 - int v^2]^+
        double excess;
    };
    std::vector<Row> rows;
    rows.reserve(static_cast<std::size_t>(n_candidates));
    int attempts = 0;
    for (int c = 0; static_cast<int>(rows.size()) < n_candidates; ++c) {
        if (++attempts > 20 * n_candidates)
            throw std::runtime_error("penalization_certificate: could not build enough candidates");
        Candidate cand;
        try {
            cand = make(c);
        } catch (const std::exception&) {
            continue; // truncated ball or empty erosion; draw another
        }
        const double mass = mass_norm2(ops, cand.v);
        if (!(mass > 0.0))
            continue;
        const double base = dirichlet_energy(ops, cand.v) + lam * std::max(0.0, 1.0 - mass);
        const double excess = indicator_volume(vol, support_of(cand.v)) - m;
        rows.push_back({static_cast<int>(rows.size()), cand.kind, base, excess});
    }

    PenalizationReport rep;
    rep.candidates_tested = static_cast<int>(rows.size());
    for (const auto& r : rows)
        if (r.excess > 0.0)
            rep.fitted_mu = std::max(rep.fitted_mu, (lhs - r.base) / r.excess);
    rep.mu_star = mu_star.value_or(rep.fitted_mu);
    rep.min_slack = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        const double rhs = r.base + rep.mu_star * std::max(0.0, r.excess);
        rep.min_slack = std::min(rep.min_slack, rhs - lhs);
        if (lhs > rhs + rel_tol * lhs)
            rep.violations.push_back({r.id, r.kind, lhs, rhs});
    }
    return rep;
}

} // namespace fk
