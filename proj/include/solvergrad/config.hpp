// config.hpp - declarative run configuration
//
// A run config is a JSON object checked against run_config_schema() before it
// is interpreted. The validator understands the subset of JSON Schema the
// schema uses (type, properties, required, additionalProperties, enum,
// minimum, exclusiveMinimum, maximum, items, $ref) plus a `discriminator`
// keyword selecting a definition by the value of one property.

#pragma once

#include "solvergrad/estimators.hpp"
#include "solvergrad/nn.hpp"
#include "solvergrad/tasks/globe_tsp.hpp"
#include "solvergrad/tasks/grid_path.hpp"
#include "solvergrad/tasks/ranking_retrieval.hpp"
#include "solvergrad/tasks/task.hpp"
#include "solvergrad/tasks/topk_explain.hpp"
#include "solvergrad/tasks/train.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace solvergrad::config {

using nlohmann::json;

// Carries the dotted path of the offending field.
struct config_error : std::invalid_argument {
    config_error(std::string field, const std::string& what)
        : std::invalid_argument(field.empty() ? what : field + ": " + what), field(std::move(field)) {}
    std::string field;
};

inline const json& run_config_schema() {
    static const json schema = json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "solvergrad run config",
  "type": "object",
  "additionalProperties": false,
  "required": ["task", "estimator"],
  "properties": {
    "task": {
      "type": "object",
      "required": ["kind"],
      "discriminator": "kind",
      "mapping": {
        "globe_tsp": "#/$defs/globe_tsp",
        "grid_path": "#/$defs/grid_path",
        "topk_explain": "#/$defs/topk_explain",
        "ranking_retrieval": "#/$defs/ranking_retrieval"
      }
    },
    "estimator": {
      "type": "object",
      "additionalProperties": false,
      "required": ["rule"],
      "properties": {
        "rule": {"enum": ["identity", "blackbox"]},
        "lambda": {"type": "number", "exclusiveMinimum": 0},
        "projection": {"enum": ["none", "mean", "norm", "std", "plane"]},
        "plane_normal": {"type": "array", "items": {"type": "number"}},
        "plane_offset": {"type": "number"},
        "order": {"enum": ["margin_then_project", "project_then_margin"]},
        "margin": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "kind": {"enum": ["none", "noise", "informed"]},
            "alpha": {"type": "number", "minimum": 0}
          }
        }
      }
    },
    "corruption": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "gradient_noise_sigma": {"type": "number", "minimum": 0},
        "label_flip_rho": {"type": "number", "minimum": 0},
        "margin_start": {"type": "integer", "minimum": 0},
        "margin_end": {"type": "integer", "minimum": -1}
      }
    },
    "optimizer": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["adam", "sgd"]},
        "learning_rate": {"type": "number", "minimum": 0},
        "beta1": {"type": "number", "minimum": 0, "maximum": 1},
        "beta2": {"type": "number", "minimum": 0, "maximum": 1},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "momentum": {"type": "number", "minimum": 0},
        "batch_size": {"type": "integer", "minimum": 1},
        "decay_epochs": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "decay_factor": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "epochs": {"type": "integer", "minimum": 0},
    "seed": {"type": "integer", "minimum": 0},
    "eval_every": {"type": "integer", "minimum": 1},
    "sweep": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "axes": {"type": "object", "additionalProperties": {"type": "array"}},
        "replicates": {"type": "integer", "minimum": 1},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "max_runs": {"type": "integer", "minimum": 1}
      }
    }
  },
  "$defs": {
    "globe_tsp": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["globe_tsp"]},
        "num_entities": {"type": "integer", "minimum": 3},
        "k": {"type": "integer", "minimum": 3, "maximum": 10},
        "num_train": {"type": "integer", "minimum": 1},
        "num_test": {"type": "integer", "minimum": 1},
        "data_seed": {"type": "integer", "minimum": 0},
        "hidden": {"type": "integer", "minimum": 1}
      }
    },
    "grid_path": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["grid_path"]},
        "height": {"type": "integer", "minimum": 1},
        "width": {"type": "integer", "minimum": 1},
        "num_classes": {"type": "integer", "minimum": 1},
        "num_train": {"type": "integer", "minimum": 1},
        "num_test": {"type": "integer", "minimum": 1},
        "embed_dim": {"type": "integer", "minimum": 1},
        "feature_noise": {"type": "number", "minimum": 0},
        "connectivity": {"enum": [4, 8]},
        "data_seed": {"type": "integer", "minimum": 0},
        "hidden": {"type": "integer", "minimum": 1}
      }
    },
    "topk_explain": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["topk_explain"]},
        "n": {"type": "integer", "minimum": 2},
        "k": {"type": "integer", "minimum": 1},
        "num_train": {"type": "integer", "minimum": 1},
        "num_test": {"type": "integer", "minimum": 1},
        "data_seed": {"type": "integer", "minimum": 0},
        "hidden": {"type": "integer", "minimum": 1},
        "sampling": {
          "type": "object",
          "additionalProperties": false,
          "required": ["kind"],
          "properties": {
            "kind": {"enum": ["none", "gumbel", "sum_of_gamma"]},
            "scale": {"type": "number", "exclusiveMinimum": 0},
            "k": {"type": "number", "minimum": 1},
            "tau": {"type": "number", "exclusiveMinimum": 0},
            "s": {"type": "integer", "minimum": 1}
          }
        }
      }
    },
    "ranking_retrieval": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["ranking_retrieval"]},
        "num_classes": {"type": "integer", "minimum": 2},
        "per_class": {"type": "integer", "minimum": 2},
        "embed_dim": {"type": "integer", "minimum": 1},
        "raw_dim": {"type": "integer", "minimum": 1},
        "feature_noise": {"type": "number", "minimum": 0},
        "gallery_size": {"type": "integer", "minimum": 1},
        "data_seed": {"type": "integer", "minimum": 0},
        "hidden": {"type": "integer", "minimum": 1}
      }
    }
  }
})");
    return schema;
}

namespace detail {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline bool has_type(const json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    if (type == "number") return v.is_number();
    return false;
}

inline const json& resolve(const json& root, const std::string& ref) {
    const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) throw std::logic_error("schema: unsupported $ref " + ref);
    return root.at("$defs").at(ref.substr(prefix.size()));
}

inline void check(const json& root, const json& schema, const json& v, const std::string& path) {
    if (schema.contains("$ref")) return check(root, resolve(root, schema["$ref"]), v, path);
    if (schema.contains("type") && !has_type(v, schema["type"].get<std::string>()))
        throw config_error(path, "expected " + schema["type"].get<std::string>() + ", got " + v.dump());
    if (schema.contains("enum")) {
        const auto& options = schema["enum"];
        if (std::find(options.begin(), options.end(), v) == options.end())
            throw config_error(path, "value " + v.dump() + " is not one of " + options.dump());
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (schema.contains("minimum") && x < schema["minimum"].get<double>())
            throw config_error(path, "must be >= " + schema["minimum"].dump());
        if (schema.contains("maximum") && x > schema["maximum"].get<double>())
            throw config_error(path, "must be <= " + schema["maximum"].dump());
        if (schema.contains("exclusiveMinimum") && !(x > schema["exclusiveMinimum"].get<double>()))
            throw config_error(path, "must be > " + schema["exclusiveMinimum"].dump());
    }
    if (v.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) check(root, schema["items"], v[i], path + "[" + std::to_string(i) + "]");
    }
    if (!v.is_object()) return;
    if (schema.contains("required")) {
        for (const auto& key : schema["required"])
            if (!v.contains(key.get<std::string>())) throw config_error(join(path, key), "required field is missing");
    }
    if (schema.contains("discriminator")) {
        const std::string key = schema["discriminator"];
        const std::string field = join(path, key);
        if (!v.at(key).is_string()) throw config_error(field, "expected string");
        const auto& mapping = schema.at("mapping");
        const std::string value = v.at(key);
        if (!mapping.contains(value)) throw config_error(field, "unknown kind '" + value + "'");
        check(root, resolve(root, mapping[value]), v, path);
    }
    const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    for (const auto& [key, value] : v.items()) {
        if (props && props->contains(key)) {
            check(root, (*props)[key], value, join(path, key));
        } else if (schema.contains("additionalProperties")) {
            const auto& extra = schema["additionalProperties"];
            if (extra.is_boolean() && !extra.get<bool>()) throw config_error(join(path, key), "unknown key");
            if (extra.is_object()) check(root, extra, value, join(path, key));
        }
    }
}

}  // namespace detail

// Throws config_error naming the first offending field.
inline void validate_against_schema(const json& config) {
    detail::check(run_config_schema(), run_config_schema(), config, "");
}

struct GlobeTspParams {
    std::size_t num_entities = 30, k = 5, num_train = 500, num_test = 200, hidden = 64;
};

struct GridPathParams {
    std::size_t height = 8, width = 8, num_classes = 5, num_train = 500, num_test = 100, embed_dim = 8, hidden = 32;
    double feature_noise = 0.3;
    int connectivity = 8;
};

struct TopkExplainParams {
    std::size_t n = 10, k = 3, num_train = 500, num_test = 200, hidden = 32;
    Noise sampling = NoNoise{};
};

struct RankingRetrievalParams {
    std::size_t num_classes = 8, per_class = 12, embed_dim = 8, raw_dim = 16, gallery_size = 12, hidden = 32;
    double feature_noise = 1.0;
};

using TaskParams = std::variant<GlobeTspParams, GridPathParams, TopkExplainParams, RankingRetrievalParams>;

struct RunConfig {
    TaskParams task;
    std::optional<std::uint64_t> data_seed;  // defaults to the run seed
    EstimatorConfig estimator;
    tasks::CorruptionConfig corruption;
    OptimizerConfig optimizer;
    int epochs = 10;
    std::uint64_t seed = 0;
    int eval_every = 1;

    std::uint64_t dataset_seed() const { return data_seed.value_or(seed); }
};

namespace detail {

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline Rule rule_from(const std::string& s) { return s == "blackbox" ? Rule::blackbox : Rule::identity; }
inline std::string rule_name(Rule r) { return r == Rule::blackbox ? "blackbox" : "identity"; }

inline MarginKind margin_from(const std::string& s) {
    if (s == "noise") return MarginKind::noise;
    if (s == "informed") return MarginKind::informed;
    return MarginKind::none;
}
inline std::string margin_name(MarginKind k) {
    switch (k) {
        case MarginKind::noise: return "noise";
        case MarginKind::informed: return "informed";
        default: return "none";
    }
}

inline json noise_to_json(const Noise& n) {
    if (const auto* g = std::get_if<Gumbel>(&n)) return {{"kind", "gumbel"}, {"scale", g->scale}};
    if (const auto* s = std::get_if<SumOfGamma>(&n)) return {{"kind", "sum_of_gamma"}, {"k", s->k}, {"tau", s->tau}, {"s", s->s}};
    return {{"kind", "none"}};
}

inline Noise noise_from_json(const json& j) {
    const std::string kind = j.at("kind");
    if (kind == "gumbel") {
        Gumbel g;
        read(j, "scale", g.scale);
        return g;
    }
    if (kind == "sum_of_gamma") {
        SumOfGamma s;
        read(j, "k", s.k);
        read(j, "tau", s.tau);
        read(j, "s", s.s);
        return s;
    }
    return NoNoise{};
}

}  // namespace detail

// Validates, then fills a RunConfig; absent optional fields keep defaults.
inline RunConfig parse_run_config(const json& j) {
    validate_against_schema(j);
    using detail::read;
    RunConfig c;
    read(j, "epochs", c.epochs);
    read(j, "seed", c.seed);
    read(j, "eval_every", c.eval_every);

    const json& t = j.at("task");
    const std::string kind = t.at("kind");
    if (t.contains("data_seed")) c.data_seed = t.at("data_seed").get<std::uint64_t>();
    if (kind == "globe_tsp") {
        GlobeTspParams p;
        read(t, "num_entities", p.num_entities);
        read(t, "k", p.k);
        read(t, "num_train", p.num_train);
        read(t, "num_test", p.num_test);
        read(t, "hidden", p.hidden);
        if (p.num_entities < p.k) throw config_error("task.num_entities", "must be at least task.k");
        c.task = p;
    } else if (kind == "grid_path") {
        GridPathParams p;
        read(t, "height", p.height);
        read(t, "width", p.width);
        read(t, "num_classes", p.num_classes);
        read(t, "num_train", p.num_train);
        read(t, "num_test", p.num_test);
        read(t, "embed_dim", p.embed_dim);
        read(t, "feature_noise", p.feature_noise);
        read(t, "connectivity", p.connectivity);
        read(t, "hidden", p.hidden);
        if (p.height * p.width > 256) throw config_error("task.height", "height*width must be <= 256");
        c.task = p;
    } else if (kind == "topk_explain") {
        TopkExplainParams p;
        read(t, "n", p.n);
        read(t, "k", p.k);
        read(t, "num_train", p.num_train);
        read(t, "num_test", p.num_test);
        read(t, "hidden", p.hidden);
        if (t.contains("sampling")) p.sampling = detail::noise_from_json(t.at("sampling"));
        if (p.k >= p.n) throw config_error("task.k", "must be smaller than task.n");
        c.task = p;
    } else {
        RankingRetrievalParams p;
        read(t, "num_classes", p.num_classes);
        read(t, "per_class", p.per_class);
        read(t, "embed_dim", p.embed_dim);
        read(t, "raw_dim", p.raw_dim);
        read(t, "feature_noise", p.feature_noise);
        read(t, "gallery_size", p.gallery_size);
        read(t, "hidden", p.hidden);
        if (p.gallery_size >= p.num_classes * p.per_class)
            throw config_error("task.gallery_size", "must be smaller than the number of items");
        c.task = p;
    }

    const json& e = j.at("estimator");
    c.estimator.rule = detail::rule_from(e.at("rule"));
    read(e, "lambda", c.estimator.lambda);
    if (e.contains("projection")) {
        const ProjectionKind pk = projection_from_name(e.at("projection"));
        if (pk == ProjectionKind::plane) {
            if (!e.contains("plane_normal")) throw config_error("estimator.plane_normal", "required for the plane projection");
            double b = 0;
            read(e, "plane_offset", b);
            try {
                c.estimator.projection = Projection::plane(e.at("plane_normal").get<Vec>(), b);
            } catch (const std::invalid_argument& err) {
                throw config_error("estimator.plane_normal", err.what());
            }
        } else {
            c.estimator.projection = Projection{pk, {}, 0};
        }
    }
    if (e.contains("order"))
        c.estimator.order = e.at("order") == "project_then_margin" ? LayerOrder::project_then_margin
                                                                   : LayerOrder::margin_then_project;
    if (e.contains("margin")) {
        const json& m = e.at("margin");
        if (m.contains("kind")) c.estimator.margin.kind = detail::margin_from(m.at("kind"));
        read(m, "alpha", c.estimator.margin.alpha);
    }

    if (j.contains("corruption")) {
        const json& k = j.at("corruption");
        read(k, "gradient_noise_sigma", c.corruption.gradient_noise_sigma);
        read(k, "label_flip_rho", c.corruption.label_flip_rho);
        read(k, "margin_start", c.corruption.margin_start);
        read(k, "margin_end", c.corruption.margin_end);
    }
    if (c.corruption.margin_end >= 0 && c.corruption.margin_end < c.corruption.margin_start)
        throw config_error("corruption.margin_end", "must not precede corruption.margin_start");
    if (c.corruption.margin_start > c.epochs || c.corruption.margin_end > c.epochs)
        throw config_error("corruption.margin_end", "margin schedule exceeds the number of epochs");

    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        if (o.contains("kind")) c.optimizer.kind = o.at("kind") == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
        read(o, "learning_rate", c.optimizer.learning_rate);
        read(o, "beta1", c.optimizer.beta1);
        read(o, "beta2", c.optimizer.beta2);
        read(o, "epsilon", c.optimizer.epsilon);
        read(o, "momentum", c.optimizer.momentum);
        read(o, "batch_size", c.optimizer.batch_size);
        read(o, "decay_epochs", c.optimizer.decay_epochs);
        read(o, "decay_factor", c.optimizer.decay_factor);
    }
    return c;
}

// Fully explicit form; parse_run_config(to_json(c)) reproduces c.
inline json to_json(const RunConfig& c) {
    json t;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GlobeTspParams>) {
                t = {{"kind", "globe_tsp"}, {"num_entities", p.num_entities}, {"k", p.k}, {"num_train", p.num_train},
                     {"num_test", p.num_test}, {"hidden", p.hidden}};
            } else if constexpr (std::is_same_v<P, GridPathParams>) {
                t = {{"kind", "grid_path"}, {"height", p.height}, {"width", p.width}, {"num_classes", p.num_classes},
                     {"num_train", p.num_train}, {"num_test", p.num_test}, {"embed_dim", p.embed_dim},
                     {"feature_noise", p.feature_noise}, {"connectivity", p.connectivity}, {"hidden", p.hidden}};
            } else if constexpr (std::is_same_v<P, TopkExplainParams>) {
                t = {{"kind", "topk_explain"}, {"n", p.n}, {"k", p.k}, {"num_train", p.num_train},
                     {"num_test", p.num_test}, {"hidden", p.hidden}, {"sampling", detail::noise_to_json(p.sampling)}};
            } else {
                t = {{"kind", "ranking_retrieval"}, {"num_classes", p.num_classes}, {"per_class", p.per_class},
                     {"embed_dim", p.embed_dim}, {"raw_dim", p.raw_dim}, {"feature_noise", p.feature_noise},
                     {"gallery_size", p.gallery_size}, {"hidden", p.hidden}};
            }
        },
        c.task);
    if (c.data_seed) t["data_seed"] = *c.data_seed;

    json e = {{"rule", detail::rule_name(c.estimator.rule)},
              {"lambda", c.estimator.lambda},
              {"projection", projection_name(c.estimator.projection.kind)},
              {"order", c.estimator.order == LayerOrder::project_then_margin ? "project_then_margin" : "margin_then_project"},
              {"margin", {{"kind", detail::margin_name(c.estimator.margin.kind)}, {"alpha", c.estimator.margin.alpha}}}};
    if (c.estimator.projection.kind == ProjectionKind::plane) {
        e["plane_normal"] = c.estimator.projection.a;
        e["plane_offset"] = c.estimator.projection.b;
    }
    return {{"task", t},
            {"estimator", e},
            {"corruption",
             {{"gradient_noise_sigma", c.corruption.gradient_noise_sigma},
              {"label_flip_rho", c.corruption.label_flip_rho},
              {"margin_start", c.corruption.margin_start},
              {"margin_end", c.corruption.margin_end}}},
            {"optimizer",
             {{"kind", c.optimizer.kind == OptimizerKind::sgd ? "sgd" : "adam"},
              {"learning_rate", c.optimizer.learning_rate},
              {"beta1", c.optimizer.beta1},
              {"beta2", c.optimizer.beta2},
              {"epsilon", c.optimizer.epsilon},
              {"momentum", c.optimizer.momentum},
              {"batch_size", c.optimizer.batch_size},
              {"decay_epochs", c.optimizer.decay_epochs},
              {"decay_factor", c.optimizer.decay_factor}}},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"eval_every", c.eval_every}};
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("", "cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error("", std::string("invalid JSON in ") + path + ": " + e.what());
    }
}

inline std::unique_ptr<tasks::Task> make_task(const RunConfig& c) {
    const std::uint64_t ds = c.dataset_seed();
    return std::visit(
        [&](const auto& p) -> std::unique_ptr<tasks::Task> {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GlobeTspParams>) {
                return std::make_unique<tasks::GlobeTspTask>(
                    tasks::gen_globe_tsp(p.num_entities, p.k, p.num_train, p.num_test, ds),
                    tasks::GlobeTspOptions{p.hidden});
            } else if constexpr (std::is_same_v<P, GridPathParams>) {
                tasks::GridGenOptions g;
                g.embed_dim = p.embed_dim;
                g.feature_noise = p.feature_noise;
                g.connectivity = p.connectivity;
                return std::make_unique<tasks::GridPathTask>(
                    tasks::gen_grid_path(p.height, p.width, p.num_classes, p.num_train, p.num_test, ds, g),
                    tasks::GridPathOptions{p.hidden});
            } else if constexpr (std::is_same_v<P, TopkExplainParams>) {
                return std::make_unique<tasks::TopkExplainTask>(
                    tasks::gen_topk_explain(p.n, p.k, p.num_train, p.num_test, ds),
                    tasks::TopkExplainOptions{p.hidden, p.sampling});
            } else {
                tasks::RetrievalGenOptions g;
                g.raw_dim = p.raw_dim;
                g.feature_noise = p.feature_noise;
                g.gallery_size = p.gallery_size;
                return std::make_unique<tasks::RankingRetrievalTask>(
                    tasks::gen_ranking_retrieval(p.num_classes, p.per_class, p.embed_dim, ds, g),
                    tasks::RankingRetrievalOptions{p.hidden});
            }
        },
        c.task);
}

inline tasks::TrainOptions train_options(const RunConfig& c) {
    tasks::TrainOptions o;
    o.estimator = c.estimator;
    o.corruption = c.corruption;
    o.optimizer = c.optimizer;
    o.epochs = c.epochs;
    o.seed = c.seed;
    o.eval_every = c.eval_every;
    return o;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepAxis {
    std::string path;    // dotted path into the run config, e.g. "estimator.margin.alpha"
    std::string column;  // CSV column name
    std::vector<json> values;
};

struct SweepRun {
    std::size_t index = 0;
    std::size_t replicate = 0;
    std::vector<json> coordinates;  // one value per axis
    json config;                    // full run config (without the sweep block)
};

struct SweepPlan {
    std::vector<SweepAxis> axes;
    std::vector<SweepRun> runs;
};

inline void set_path(json& j, const std::string& path, const json& value) {
    json* at = &j;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw config_error("sweep.axes", "malformed axis path '" + path + "'");
        if (dot == std::string::npos) {
            (*at)[key] = value;
            return;
        }
        if (!at->contains(key)) (*at)[key] = json::object();
        if (!(*at)[key].is_object()) throw config_error(path, "axis path crosses a non-object value");
        at = &(*at)[key];
        start = dot + 1;
    }
}

// Seed of replicate r under master seed m. Grid points share replicate seeds
// so that runs differing only in their axis values are paired.
inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate) {
    return tasks::splitmix64(master ^ static_cast<std::uint64_t>(replicate));
}

// Expands the grid (axes in key order, last axis fastest, replicates
// innermost). Every run config is validated.
inline SweepPlan expand_sweep(const json& config, std::optional<std::uint64_t> master_seed = std::nullopt) {
    validate_against_schema(config);
    json base = config;
    json sweep = base.contains("sweep") ? base["sweep"] : json::object();
    base.erase("sweep");
    const std::uint64_t master = master_seed.value_or(base.value("seed", std::uint64_t{0}));

    SweepPlan plan;
    if (sweep.contains("axes")) {
        for (const auto& [path, values] : sweep["axes"].items()) {
            if (values.empty()) throw config_error("sweep.axes." + path, "axis has no values");
            plan.axes.push_back({path, path, std::vector<json>(values.begin(), values.end())});
        }
    }
    // Leaf names as columns unless two axes share a leaf.
    for (auto& a : plan.axes) {
        const std::size_t dot = a.path.rfind('.');
        a.column = dot == std::string::npos ? a.path : a.path.substr(dot + 1);
    }
    for (auto& a : plan.axes) {
        const auto same = std::count_if(plan.axes.begin(), plan.axes.end(), [&](const SweepAxis& b) { return b.column == a.column; });
        if (same > 1) a.column = a.path;
    }
    for (std::size_t i = 0; i < plan.axes.size(); ++i)
        for (std::size_t k = i + 1; k < plan.axes.size(); ++k)
            if (plan.axes[i].column == plan.axes[k].column) throw config_error("sweep.axes", "duplicate axis " + plan.axes[i].path);

    std::vector<std::uint64_t> seeds;
    if (sweep.contains("seeds")) {
        seeds = sweep["seeds"].get<std::vector<std::uint64_t>>();
        if (seeds.empty()) throw config_error("sweep.seeds", "must not be empty");
    } else {
        const std::size_t reps = sweep.value("replicates", std::size_t{1});
        for (std::size_t r = 0; r < reps; ++r) seeds.push_back(replicate_seed(master, r));
    }

    std::size_t points = 1;
    for (const auto& a : plan.axes) points *= a.values.size();
    const std::size_t total = points * seeds.size();
    const std::size_t cap = sweep.value("max_runs", std::size_t{256});
    if (total > cap)
        throw config_error("sweep.max_runs", "grid expands to " + std::to_string(total) + " runs, cap is " + std::to_string(cap));

    const bool seed_axis = std::any_of(plan.axes.begin(), plan.axes.end(), [](const SweepAxis& a) { return a.path == "seed"; });
    std::vector<std::size_t> digit(plan.axes.size(), 0);
    for (std::size_t p = 0; p < points; ++p) {
        std::size_t rest = p;
        for (std::size_t a = plan.axes.size(); a-- > 0;) {
            digit[a] = rest % plan.axes[a].values.size();
            rest /= plan.axes[a].values.size();
        }
        for (std::size_t r = 0; r < seeds.size(); ++r) {
            SweepRun run;
            run.index = plan.runs.size();
            run.replicate = r;
            run.config = base;
            for (std::size_t a = 0; a < plan.axes.size(); ++a) {
                run.coordinates.push_back(plan.axes[a].values[digit[a]]);
                set_path(run.config, plan.axes[a].path, plan.axes[a].values[digit[a]]);
            }
            if (!seed_axis) run.config["seed"] = seeds[r];
            try {
                parse_run_config(run.config);
            } catch (const config_error& e) {
                throw config_error(e.field, std::string("in sweep run ") + std::to_string(run.index) + ": " + e.what());
            }
            plan.runs.push_back(std::move(run));
        }
    }
    return plan;
}

}  // namespace solvergrad::config
