#include "snnr/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "snnr/rng.hpp"

namespace snnr {

namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(ctx + "." + key + ": " + e.what());
    }
}

void read_path(const Json& j, const char* key, std::filesystem::path& out, const std::string& ctx) {
    std::string s;
    read_opt(j, key, s, ctx);
    if (!s.empty()) out = s;
}

void read_opt_path(const Json& j, const char* key, std::optional<std::filesystem::path>& out,
                   const std::string& ctx) {
    std::string s;
    read_opt(j, key, s, ctx);
    if (!s.empty()) out = s;
}

AttackSchedule schedule_from(const Json& j, const std::string& ctx) {
    AttackSchedule s;
    read_opt(j, "iterations", s.iterations, ctx);
    read_opt(j, "alpha_factor", s.alpha_factor, ctx);
    read_opt(j, "random_start", s.random_start, ctx);
    if (s.iterations == 0) throw ConfigError(ctx + ".iterations must be at least 1");
    if (!(s.alpha_factor > 0.0)) throw ConfigError(ctx + ".alpha_factor must be positive");
    return s;
}

Json schedule_json(const AttackSchedule& s) {
    return {{"iterations", s.iterations},
            {"alpha_factor", s.alpha_factor},
            {"random_start", s.random_start}};
}

DataSpec data_from(const Json& j) {
    const std::string ctx = "data";
    require_keys(j,
                 {"source", "blobs", "train_images", "train_labels", "test_images", "test_labels",
                  "num_classes", "classes", "crop", "downscale", "train_size", "test_size"},
                 ctx);
    DataSpec d;
    std::string source = "blobs";
    read_opt(j, "source", source, ctx);
    if (source == "blobs") {
        d.source = DataSource::blobs;
    } else if (source == "idx") {
        d.source = DataSource::idx;
    } else {
        throw ConfigError(ctx + ".source: expected 'blobs' or 'idx', got '" + source + "'");
    }
    if (j.contains("blobs")) {
        const Json& b = j["blobs"];
        require_keys(b, {"n_per_class", "classes", "dim", "separation", "test_per_class"},
                     ctx + ".blobs");
        read_opt(b, "n_per_class", d.blobs.n_per_class, ctx + ".blobs");
        read_opt(b, "classes", d.blobs.classes, ctx + ".blobs");
        read_opt(b, "dim", d.blobs.dim, ctx + ".blobs");
        read_opt(b, "separation", d.blobs.separation, ctx + ".blobs");
        read_opt(b, "test_per_class", d.blobs.test_per_class, ctx + ".blobs");
        if (d.blobs.n_per_class == 0 || d.blobs.test_per_class == 0 || d.blobs.classes < 2 ||
            d.blobs.dim == 0) {
            throw ConfigError(ctx + ".blobs: sizes must be positive and classes ≥ 2");
        }
    }
    read_path(j, "train_images", d.train_images, ctx);
    read_path(j, "train_labels", d.train_labels, ctx);
    read_path(j, "test_images", d.test_images, ctx);
    read_path(j, "test_labels", d.test_labels, ctx);
    read_opt(j, "num_classes", d.num_classes, ctx);
    read_opt(j, "classes", d.classes, ctx);
    read_opt(j, "crop", d.crop, ctx);
    read_opt(j, "downscale", d.downscale, ctx);
    read_opt(j, "train_size", d.train_size, ctx);
    read_opt(j, "test_size", d.test_size, ctx);
    if (d.downscale == 0) throw ConfigError(ctx + ".downscale must be at least 1");
    for (std::size_t c : d.classes) {
        if (c >= d.num_classes) throw ConfigError(ctx + ".classes: label out of range");
    }
    return d;
}

Json data_json(const DataSpec& d) {
    return {{"source", d.source == DataSource::blobs ? "blobs" : "idx"},
            {"blobs",
             {{"n_per_class", d.blobs.n_per_class},
              {"classes", d.blobs.classes},
              {"dim", d.blobs.dim},
              {"separation", d.blobs.separation},
              {"test_per_class", d.blobs.test_per_class}}},
            {"train_images", d.train_images.string()},
            {"train_labels", d.train_labels.string()},
            {"test_images", d.test_images.string()},
            {"test_labels", d.test_labels.string()},
            {"num_classes", d.num_classes},
            {"classes", d.classes},
            {"crop", d.crop},
            {"downscale", d.downscale},
            {"train_size", d.train_size},
            {"test_size", d.test_size}};
}

std::size_t effective_classes(const DataSpec& d) {
    if (d.source == DataSource::blobs) return d.blobs.classes;
    return d.classes.empty() ? d.num_classes : d.classes.size();
}

}  // namespace

void apply_override(Json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "': expected key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    Json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "': empty key segment");
        if (node->is_null()) *node = Json::object();
        if (!node->is_object()) {
            throw ConfigError("override '" + assignment + "': '" + part + "' is not inside an object");
        }
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

NetworkConfig default_network(const DataSpec& d) {
    NetworkConfig c;
    const std::size_t classes = effective_classes(d);
    if (d.source == DataSource::blobs) {
        c.input_shape = {d.blobs.dim};
        c.layers = {LayerSpec::dense(16), LayerSpec::dense(classes)};
    } else {
        const std::size_t side = (28 - 2 * d.crop) / d.downscale;
        c.input_shape = {1, side, side};
        c.layers = {LayerSpec::conv(8, 3, 1, 1), LayerSpec::pool(2, 2), LayerSpec::dense(32),
                    LayerSpec::dense(classes)};
    }
    return c;
}

RunConfig run_config_from_json(const Json& j) {
    require_keys(j,
                 {"$schema", "seed", "output_dir", "threads", "data", "network", "train", "attack",
                  "explore", "report"},
                 "config");
    RunConfig c;
    read_opt(j, "seed", c.seed, "config");
    read_path(j, "output_dir", c.output_dir, "config");
    read_opt(j, "threads", c.threads, "config");
    if (c.threads == 0) throw ConfigError("config.threads must be at least 1");
    if (j.contains("data")) c.data = data_from(j["data"]);
    c.network = j.contains("network") ? network_config_from_json(j["network"]) : default_network(c.data);
    if (c.network.num_classes() != effective_classes(c.data)) {
        throw ConfigError("network: output layer has " + std::to_string(c.network.num_classes()) +
                          " units but the data has " + std::to_string(effective_classes(c.data)) +
                          " classes");
    }
    c.train.seed = c.seed;
    if (j.contains("train")) {
        c.train = train_config_from_json(j["train"]);
        if (!j["train"].contains("seed")) c.train.seed = c.seed;
    }

    if (j.contains("attack")) {
        const Json& a = j["attack"];
        const std::string ctx = "attack";
        require_keys(a,
                     {"checkpoint", "method", "epsilons", "iterations", "alpha_factor",
                      "random_start", "eval_size", "dump_images"},
                     ctx);
        read_opt_path(a, "checkpoint", c.attack.checkpoint, ctx);
        std::string method = "pgd";
        read_opt(a, "method", method, ctx);
        if (method == "pgd") {
            c.attack.method = AttackMethod::pgd;
        } else if (method == "fgsm") {
            c.attack.method = AttackMethod::fgsm;
        } else {
            throw ConfigError(ctx + ".method: expected 'pgd' or 'fgsm'");
        }
        read_opt(a, "epsilons", c.attack.epsilons, ctx);
        c.attack.schedule = schedule_from(a, ctx);
        read_opt(a, "eval_size", c.attack.eval_size, ctx);
        read_opt(a, "dump_images", c.attack.dump_images, ctx);
    }
    if (c.attack.epsilons.empty()) throw ConfigError("attack.epsilons must not be empty");
    for (double e : c.attack.epsilons) {
        if (!(e >= 0.0)) throw ConfigError("attack.epsilons must be non-negative");
    }

    if (j.contains("explore")) {
        const Json& e = j["explore"];
        const std::string ctx = "explore";
        require_keys(e,
                     {"v_th_values", "t_values", "epsilons", "a_th", "eval_size", "iterations",
                      "alpha_factor", "random_start"},
                     ctx);
        read_opt(e, "v_th_values", c.explore.v_th_values, ctx);
        read_opt(e, "t_values", c.explore.t_values, ctx);
        read_opt(e, "epsilons", c.explore.epsilons, ctx);
        read_opt(e, "a_th", c.explore.a_th, ctx);
        read_opt(e, "eval_size", c.explore.eval_size, ctx);
        c.explore.schedule = schedule_from(e, ctx);
    }

    if (j.contains("report")) {
        const Json& r = j["report"];
        require_keys(r, {"results_dir", "baseline_curve", "baseline_checkpoint"}, "report");
        read_opt_path(r, "results_dir", c.report.results_dir, "report");
        read_opt_path(r, "baseline_curve", c.report.baseline_curve, "report");
        read_opt_path(r, "baseline_checkpoint", c.report.baseline_checkpoint, "report");
    }
    return c;
}

Json to_json(const RunConfig& c) {
    auto opt = [](const std::optional<std::filesystem::path>& p) {
        return p ? Json(p->string()) : Json(nullptr);
    };
    Json attack = schedule_json(c.attack.schedule);
    attack["method"] = c.attack.method == AttackMethod::pgd ? "pgd" : "fgsm";
    attack["epsilons"] = c.attack.epsilons;
    attack["eval_size"] = c.attack.eval_size;
    attack["dump_images"] = c.attack.dump_images;
    if (c.attack.checkpoint) attack["checkpoint"] = c.attack.checkpoint->string();
    Json explore = schedule_json(c.explore.schedule);
    explore["v_th_values"] = c.explore.v_th_values;
    explore["t_values"] = c.explore.t_values;
    explore["epsilons"] = c.explore.epsilons;
    explore["a_th"] = c.explore.a_th;
    explore["eval_size"] = c.explore.eval_size;
    Json report = Json::object();
    if (c.report.results_dir) report["results_dir"] = opt(c.report.results_dir);
    if (c.report.baseline_curve) report["baseline_curve"] = opt(c.report.baseline_curve);
    if (c.report.baseline_checkpoint) report["baseline_checkpoint"] = opt(c.report.baseline_checkpoint);
    return {{"seed", c.seed},
            {"output_dir", c.output_dir.string()},
            {"threads", c.threads},
            {"data", data_json(c.data)},
            {"network", to_json(c.network)},
            {"train", to_json(c.train)},
            {"attack", attack},
            {"explore", explore},
            {"report", report}};
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides) {
    Json doc = Json::object();
    if (file) {
        if (!std::filesystem::exists(*file)) {
            throw ConfigError("config file not found: " + file->string());
        }
        try {
            doc = read_json_file(*file);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (const char* dir = std::getenv("SNNR_OUTPUT_DIR"); dir && *dir) doc["output_dir"] = dir;
    if (const char* threads = std::getenv("SNNR_THREADS"); threads && *threads) {
        char* end = nullptr;
        const unsigned long long n = std::strtoull(threads, &end, 10);
        if (*end != '\0' || n == 0) throw ConfigError("SNNR_THREADS must be a positive integer");
        doc["threads"] = n;
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return run_config_from_json(doc);
}

void check_data_paths(const DataSpec& d) {
    if (d.source != DataSource::idx) return;
    const std::pair<const char*, const std::filesystem::path*> paths[] = {
        {"train_images", &d.train_images},
        {"train_labels", &d.train_labels},
        {"test_images", &d.test_images},
        {"test_labels", &d.test_labels}};
    for (const auto& [name, p] : paths) {
        if (p->empty()) throw ConfigError(std::string("data.") + name + " is required for idx data");
        if (!std::filesystem::is_regular_file(*p)) {
            throw ConfigError(std::string("data.") + name + ": no such file " + p->string());
        }
    }
}

std::pair<Dataset, Dataset> load_datasets(const DataSpec& d, std::uint64_t seed) {
    Dataset train_set, test_set;
    if (d.source == DataSource::blobs) {
        const BlobSpec& b = d.blobs;
        train_set = make_blobs(b.n_per_class, b.classes, b.dim, b.separation,
                               derive_seed(seed, SeedStream::blobs, {0}));
        test_set = make_blobs(b.test_per_class, b.classes, b.dim, b.separation,
                              derive_seed(seed, SeedStream::blobs, {1}));
    } else {
        train_set = load_mnist_idx(d.train_images, d.train_labels, d.num_classes);
        test_set = load_mnist_idx(d.test_images, d.test_labels, d.num_classes);
        if (!d.classes.empty()) {
            train_set = select_classes(train_set, d.classes);
            test_set = select_classes(test_set, d.classes);
        }
        if (d.crop > 0 || d.downscale > 1) {
            train_set = downscale(train_set, d.crop, d.downscale);
            test_set = downscale(test_set, d.crop, d.downscale);
        }
    }
    if (d.train_size > 0 && d.train_size < train_set.size()) {
        train_set = subset(train_set, d.train_size, derive_seed(seed, SeedStream::subset, {0}));
    }
    if (d.test_size > 0 && d.test_size < test_set.size()) {
        test_set = subset(test_set, d.test_size, derive_seed(seed, SeedStream::subset, {1}));
    }
    return {std::move(train_set), std::move(test_set)};
}

GridSpec grid_from_run_config(const RunConfig& c) {
    GridSpec g;
    g.v_th_values = c.explore.v_th_values;
    g.t_values = c.explore.t_values;
    g.epsilons = c.explore.epsilons;
    g.a_th = c.explore.a_th;
    g.network = c.network;
    g.train = c.train;
    g.attack = c.explore.schedule;
    g.eval_size = c.explore.eval_size;
    g.seed = c.seed;
    g.validate();
    return g;
}

}  // namespace snnr
