#include <set>

#include "fk/manifold.hpp"

namespace fk {

nlohmann::json chart_to_json(const MetricChart& chart) { return chart.descriptor(); }

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where)
{
    if (!j.is_object())
        throw std::invalid_argument(where + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw std::invalid_argument(where + "." + key + ": unknown key");
}

double param(const nlohmann::json& params, const char* key)
{
    if (!params.contains(key) || !params[key].is_number())
        throw std::invalid_argument(std::string("chart.params.") + key +
                                    ": missing or not a number");
    return params[key].get<double>();
}

} // namespace

MetricChart chart_from_json(const nlohmann::json& j)
{
    check_keys(j, {"name", "domain", "periodic", "boundary", "params", "samples", "scale"},
               "chart");
    if (!j.contains("name") || !j["name"].is_string())
        throw std::invalid_argument("chart.name: missing or not a string");
    const auto name = j["name"].get<std::string>();
    const double scale = j.value("scale", 1.0);

    auto finish = [scale](MetricChart c) { return scale == 1.0 ? c : c.scaled(scale); };

    if (j.contains("params")) {
        const auto& p = j["params"];
        if (name == "flat_torus") {
            check_keys(p, {"L1", "L2"}, "chart.params");
            return finish(builtin_flat_torus(param(p, "L1"), param(p, "L2")));
        }
        if (name == "sphere") {
            check_keys(p, {"R"}, "chart.params");
            return finish(builtin_sphere(param(p, "R")));
        }
        if (name == "catenoid") {
            check_keys(p, {"neck", "T"}, "chart.params");
            return finish(builtin_catenoid(param(p, "neck"), param(p, "T")));
        }
        throw std::invalid_argument("chart.name: unknown builtin chart '" + name + "'");
    }

    if (!j.contains("samples"))
        throw std::invalid_argument("chart: needs either params (builtin) or samples");
    if (!j.contains("domain") || !j["domain"].is_array() || j["domain"].size() != 2)
        throw std::invalid_argument("chart.domain: expected [[lo0, hi0], [lo1, hi1]]");
    std::array<double, 2> lo{}, hi{};
    for (int a = 0; a < 2; ++a) {
        lo[a] = j["domain"][a].at(0).get<double>();
        hi[a] = j["domain"][a].at(1).get<double>();
    }
    std::array<AxisKind, 2> kinds{AxisKind::dirichlet, AxisKind::dirichlet};
    if (j.contains("boundary")) {
        for (int a = 0; a < 2; ++a)
            kinds[a] = axis_kind_from_string(j["boundary"].at(a).get<std::string>());
    } else if (j.contains("periodic")) {
        for (int a = 0; a < 2; ++a)
            kinds[a] = j["periodic"].at(a).get<bool>() ? AxisKind::periodic : AxisKind::dirichlet;
    }
    const auto& s = j["samples"];
    check_keys(s, {"n", "g11", "g12", "g22"}, "chart.samples");
    MetricSamples ms;
    ms.n0 = s.at("n").at(0).get<int>();
    ms.n1 = s.at("n").at(1).get<int>();
    ms.g11 = s.at("g11").get<std::vector<double>>();
    ms.g12 = s.at("g12").get<std::vector<double>>();
    ms.g22 = s.at("g22").get<std::vector<double>>();
    return finish(builtin_custom(name, lo, hi, kinds, std::move(ms)));
}

} // namespace fk
