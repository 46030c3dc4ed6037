#include "snnr/serialize.hpp"

#include <fstream>
#include <sstream>

namespace snnr {

namespace {

template <typename T>
T value_or(const Json& j, const char* key, T fallback, const std::string& context) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(context + "." + key + ": " + e.what());
    }
}

template <typename T>
T required(const Json& j, const char* key, const std::string& context) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(context + ": missing key '" + key + "'");
    try {
        return it->get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(context + "." + key + ": " + e.what());
    }
}

template <typename F>
auto as_config_error(const std::string& context, F f) -> decltype(f()) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw ConfigError(context + ": " + e.what());
    }
}

Tensor tensor_from(const Json& values, const Shape& shape, const std::string& context) {
    std::vector<double> data;
    try {
        data = values.get<std::vector<double>>();
    } catch (const Json::exception& e) {
        throw ConfigError(context + ": " + e.what());
    }
    if (data.size() != shape_size(shape)) {
        throw ConfigError(context + ": expected " + std::to_string(shape_size(shape)) +
                          " values for shape " + shape_string(shape) + ", got " +
                          std::to_string(data.size()));
    }
    return Tensor(shape, std::move(data));
}

}  // namespace

void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                  const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(context + ": unknown key '" + key + "'");
    }
}

Json to_json(const LifParams& p) {
    return {{"v_th", p.v_th},
            {"leak", p.leak},
            {"reset", std::string(to_string(p.reset))},
            {"v_rest", p.v_rest}};
}

Json to_json(const LayerSpec& s) {
    Json j = {{"type", std::string(to_string(s.kind))}};
    switch (s.kind) {
        case LayerKind::conv2d:
            j["filters"] = s.filters;
            j["kernel"] = s.kernel;
            j["stride"] = s.stride;
            j["padding"] = s.padding;
            break;
        case LayerKind::avgpool:
            j["kernel"] = s.kernel;
            j["stride"] = s.stride;
            break;
        case LayerKind::dense:
            j["units"] = s.units;
            break;
    }
    return j;
}

Json to_json(const NetworkConfig& c) {
    Json layers = Json::array();
    for (const auto& l : c.layers) layers.push_back(to_json(l));
    return {{"input_shape", c.input_shape},
            {"mode", std::string(to_string(c.mode))},
            {"time_window", c.time_window},
            {"encoder", std::string(to_string(c.encoder))},
            {"lif", to_json(c.lif)},
            {"surrogate", {{"slope", c.surrogate.slope}}},
            {"layers", layers}};
}

Json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"optimizer", std::string(to_string(c.optimizer))},
            {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
            {"seed", c.seed}};
}

Json to_json(const AttackConfig& c) {
    return {{"epsilon", c.epsilon},
            {"alpha", c.alpha},
            {"iterations", c.iterations},
            {"random_start", c.random_start}};
}

LifParams lif_params_from_json(const Json& j) {
    const std::string ctx = "lif";
    require_keys(j, {"v_th", "leak", "reset", "v_rest"}, ctx);
    LifParams p;
    p.v_th = value_or(j, "v_th", p.v_th, ctx);
    p.leak = value_or(j, "leak", p.leak, ctx);
    p.v_rest = value_or(j, "v_rest", p.v_rest, ctx);
    const auto reset = value_or<std::string>(j, "reset", std::string(to_string(p.reset)), ctx);
    as_config_error(ctx, [&] {
        p.reset = parse_reset_mode(reset);
        p.validate();
        return 0;
    });
    return p;
}

LayerSpec layer_spec_from_json(const Json& j) {
    const std::string ctx = "layer";
    if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
    const auto type = required<std::string>(j, "type", ctx);
    const LayerKind kind = as_config_error(ctx, [&] { return parse_layer_kind(type); });
    switch (kind) {
        case LayerKind::conv2d:
            require_keys(j, {"type", "filters", "kernel", "stride", "padding"}, ctx);
            return LayerSpec::conv(required<std::size_t>(j, "filters", ctx),
                                   required<std::size_t>(j, "kernel", ctx),
                                   value_or<std::size_t>(j, "stride", 1, ctx),
                                   value_or<std::size_t>(j, "padding", 0, ctx));
        case LayerKind::avgpool: {
            require_keys(j, {"type", "kernel", "stride"}, ctx);
            const auto k = required<std::size_t>(j, "kernel", ctx);
            return LayerSpec::pool(k, value_or<std::size_t>(j, "stride", k, ctx));
        }
        case LayerKind::dense:
            require_keys(j, {"type", "units"}, ctx);
            return LayerSpec::dense(required<std::size_t>(j, "units", ctx));
    }
    throw ConfigError(ctx + ": unknown type");
}

NetworkConfig network_config_from_json(const Json& j) {
    const std::string ctx = "network";
    require_keys(j, {"input_shape", "mode", "time_window", "encoder", "lif", "surrogate", "layers"},
                 ctx);
    NetworkConfig c;
    c.input_shape = required<Shape>(j, "input_shape", ctx);
    const auto mode = value_or<std::string>(j, "mode", std::string(to_string(c.mode)), ctx);
    const auto encoder = value_or<std::string>(j, "encoder", std::string(to_string(c.encoder)), ctx);
    c.time_window = value_or(j, "time_window", c.time_window, ctx);
    if (j.contains("lif")) c.lif = lif_params_from_json(j["lif"]);
    if (j.contains("surrogate")) {
        require_keys(j["surrogate"], {"slope"}, ctx + ".surrogate");
        c.surrogate.slope = value_or(j["surrogate"], "slope", c.surrogate.slope, ctx + ".surrogate");
    }
    const auto& layers = j.contains("layers") ? j["layers"] : Json();
    if (!layers.is_array() || layers.empty()) throw ConfigError(ctx + ".layers: expected a non-empty array");
    for (const auto& l : layers) c.layers.push_back(layer_spec_from_json(l));
    try {
        c.mode = parse_neuron_mode(mode);
        c.encoder = parse_encoder_kind(encoder);
        c.validate();
    } catch (const Error& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    return c;
}

TrainConfig train_config_from_json(const Json& j) {
    const std::string ctx = "train";
    require_keys(j, {"epochs", "batch_size", "learning_rate", "optimizer", "adam", "seed"}, ctx);
    TrainConfig c;
    c.epochs = value_or(j, "epochs", c.epochs, ctx);
    c.batch_size = value_or(j, "batch_size", c.batch_size, ctx);
    c.learning_rate = value_or(j, "learning_rate", c.learning_rate, ctx);
    c.seed = value_or(j, "seed", c.seed, ctx);
    const auto opt = value_or<std::string>(j, "optimizer", std::string(to_string(c.optimizer)), ctx);
    if (j.contains("adam")) {
        const auto& a = j["adam"];
        require_keys(a, {"beta1", "beta2", "epsilon"}, ctx + ".adam");
        c.adam.beta1 = value_or(a, "beta1", c.adam.beta1, ctx + ".adam");
        c.adam.beta2 = value_or(a, "beta2", c.adam.beta2, ctx + ".adam");
        c.adam.epsilon = value_or(a, "epsilon", c.adam.epsilon, ctx + ".adam");
    }
    as_config_error(ctx, [&] {
        c.optimizer = parse_optimizer_kind(opt);
        c.validate();
        return 0;
    });
    return c;
}

AttackConfig attack_config_from_json(const Json& j) {
    const std::string ctx = "attack";
    require_keys(j, {"epsilon", "alpha", "iterations", "random_start"}, ctx);
    AttackConfig c;
    c.epsilon = value_or(j, "epsilon", c.epsilon, ctx);
    c.iterations = value_or(j, "iterations", c.iterations, ctx);
    c.random_start = value_or(j, "random_start", c.random_start, ctx);
    c.alpha = value_or(j, "alpha", 2.5 * c.epsilon / static_cast<double>(std::max<std::size_t>(c.iterations, 1)), ctx);
    as_config_error(ctx, [&] {
        c.validate();
        return 0;
    });
    return c;
}

Json checkpoint_to_json(const Checkpoint& ckpt) {
    Json params = Json::array();
    for (const auto& p : ckpt.net.params) {
        if (p.weight.empty()) {
            params.push_back(Json::object());
            continue;
        }
        params.push_back({{"weight_shape", p.weight.shape()},
                          {"weight", p.weight.values()},
                          {"bias", p.bias.values()}});
    }
    Json j = {{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"network", to_json(ckpt.net.config)},
              {"params", params},
              {"eval_seed", ckpt.eval_seed},
              {"meta", ckpt.meta}};
    j["clean_accuracy"] = ckpt.clean_accuracy ? Json(*ckpt.clean_accuracy) : Json(nullptr);
    return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
    const std::string ctx = "checkpoint";
    require_keys(j, {"format", "version", "network", "params", "clean_accuracy", "eval_seed", "meta"},
                 ctx);
    if (required<std::string>(j, "format", ctx) != kCheckpointFormat) {
        throw ConfigError(ctx + ": not an snnr checkpoint");
    }
    const int version = required<int>(j, "version", ctx);
    if (version != kCheckpointVersion) {
        throw ConfigError(ctx + ": unsupported version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.net.config = network_config_from_json(required<Json>(j, "network", ctx));
    const auto shapes = parameter_shapes(ckpt.net.config);
    const auto params = required<Json>(j, "params", ctx);
    if (!params.is_array() || params.size() != shapes.size()) {
        throw ConfigError(ctx + ".params: expected one entry per layer");
    }
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const std::string lctx = ctx + ".params[" + std::to_string(l) + "]";
        LayerParams lp;
        if (!shapes[l].first.empty()) {
            require_keys(params[l], {"weight_shape", "weight", "bias"}, lctx);
            if (required<Shape>(params[l], "weight_shape", lctx) != shapes[l].first) {
                throw ConfigError(lctx + ": weight shape does not match the network");
            }
            lp.weight = tensor_from(params[l]["weight"], shapes[l].first, lctx + ".weight");
            lp.bias = tensor_from(required<Json>(params[l], "bias", lctx), shapes[l].second,
                                  lctx + ".bias");
        } else {
            require_keys(params[l], {}, lctx);
        }
        ckpt.net.params.push_back(std::move(lp));
    }
    if (j.contains("clean_accuracy") && !j["clean_accuracy"].is_null()) {
        ckpt.clean_accuracy = required<double>(j, "clean_accuracy", ctx);
    }
    ckpt.eval_seed = value_or<std::uint64_t>(j, "eval_seed", 0, ctx);
    if (j.contains("meta")) ckpt.meta = j["meta"];
    ckpt.net.validate();
    return ckpt;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_json_file(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_json_file(path));
}

}  // namespace snnr
