// instance_io.hpp - JSON records {kind, params, omega} for solver instances

#pragma once

#include "solvergrad/solvers.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace solvergrad {

struct SolverInstance {
    SolverSpec spec;
    Vec omega;
};

inline nlohmann::json spec_params(const SolverSpec& spec) {
    using nlohmann::json;
    struct V {
        json operator()(const ExplicitSet& s) const { return {{"members", s.members}}; }
        json operator()(const TopK& s) const { return {{"n", s.n}, {"k", s.k}}; }
        json operator()(const Ranking& s) const { return {{"n", s.n}}; }
        json operator()(const GridPath& s) const {
            return {{"height", s.height}, {"width", s.width}, {"connectivity", s.connectivity}};
        }
        json operator()(const Tsp& s) const { return {{"cities", s.cities}}; }
        json operator()(const Assignment& s) const { return {{"n", s.n}}; }
    };
    return std::visit(V{}, spec);
}

inline nlohmann::json to_json(const SolverInstance& inst) {
    return {{"kind", kind_name(inst.spec)}, {"params", spec_params(inst.spec)}, {"omega", inst.omega}};
}

inline SolverSpec spec_from_json(const std::string& kind, const nlohmann::json& p) {
    if (kind == "explicit") return ExplicitSet{p.at("members").get<std::vector<Vec>>()};
    if (kind == "topk") return TopK{p.at("n").get<std::size_t>(), p.at("k").get<std::size_t>()};
    if (kind == "ranking") return Ranking{p.at("n").get<std::size_t>()};
    if (kind == "grid_path")
        return GridPath{p.at("height").get<std::size_t>(), p.at("width").get<std::size_t>(), p.value("connectivity", 8)};
    if (kind == "tsp") return Tsp{p.at("cities").get<std::size_t>()};
    if (kind == "assignment") return Assignment{p.at("n").get<std::size_t>()};
    throw solver_error("unknown solver kind '" + kind + "'");
}

// Parses and validates a record; the cost length must match the spec.
inline SolverInstance instance_from_json(const nlohmann::json& j) {
    SolverInstance inst{spec_from_json(j.at("kind").get<std::string>(), j.at("params")), j.at("omega").get<Vec>()};
    validate(inst.spec);
    if (inst.omega.size() != dimension(inst.spec))
        throw solver_error("instance: omega has " + std::to_string(inst.omega.size()) + " entries, expected " +
                           std::to_string(dimension(inst.spec)));
    return inst;
}

}  // namespace solvergrad
