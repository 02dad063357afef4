#include "dreams/report.hpp"

#include <charconv>
#include <fstream>
#include <set>

namespace dreams {

using nlohmann::json;

namespace {

// Fetches j[key] into out when present. Type mismatches become ConfigError.
template <typename T>
void read_key(const json& j, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return;
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object())
        throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown config key '" + key + "' in " + where);
}

json metrics_to_json(const MetricReport& m) {
    return {{"knn", m.knn}, {"cpd", m.cpd}, {"k", m.k}, {"cpd_sample", m.cpd_sample}, {"seed", m.seed}};
}

MetricReport metrics_from_json(const json& j) {
    MetricReport m;
    m.knn = j.at("knn").get<double>();
    m.cpd = j.at("cpd").get<double>();
    m.k = j.at("k").get<Index>();
    m.cpd_sample = j.at("cpd_sample").get<Index>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

} // namespace

Method parse_method(const std::string& name) {
    if (name == "tsne")
        return Method::tsne;
    if (name == "pca")
        return Method::pca;
    if (name == "mds")
        return Method::mds;
    if (name == "dreams-pca" || name == "dreams")
        return Method::dreams_pca;
    if (name == "dreams-mds")
        return Method::dreams_mds;
    if (name == "dreams-decoder")
        return Method::dreams_decoder;
    throw ConfigError("unknown method '" + name +
                      "' (expected tsne, pca, mds, dreams-pca, dreams-mds or dreams-decoder)");
}

std::string method_name(Method method) {
    switch (method) {
    case Method::tsne: return "tsne";
    case Method::pca: return "pca";
    case Method::mds: return "mds";
    case Method::dreams_pca: return "dreams-pca";
    case Method::dreams_mds: return "dreams-mds";
    case Method::dreams_decoder: return "dreams-decoder";
    }
    return "dreams-pca";
}

bool uses_lambda(Method method) {
    return method == Method::dreams_pca || method == Method::dreams_mds || method == Method::dreams_decoder;
}

PenaltyNormalization parse_normalization(const std::string& name) {
    if (name == "mean")
        return PenaltyNormalization::mean;
    if (name == "per-point" || name == "per_point")
        return PenaltyNormalization::per_point;
    if (name == "sum")
        return PenaltyNormalization::sum;
    throw ConfigError("unknown penalty normalization '" + name + "' (expected mean, per-point or sum)");
}

std::string normalization_name(PenaltyNormalization normalization) {
    switch (normalization) {
    case PenaltyNormalization::mean: return "mean";
    case PenaltyNormalization::per_point: return "per-point";
    case PenaltyNormalization::sum: return "sum";
    }
    return "mean";
}

json config_to_json(const RunConfig& cfg) {
    const auto& opt = cfg.dreams.optimizer;
    json optimizer = {
        {"total_iters", opt.total_iters},
        {"ee_iters", opt.ee_iters},
        {"ee_factor", opt.ee_factor},
        {"learning_rate", opt.learning_rate ? json(*opt.learning_rate) : json(nullptr)},
        {"momentum_early", opt.momentum_early},
        {"momentum_late", opt.momentum_late},
        {"theta", opt.theta},
        {"min_gain", opt.min_gain},
    };
    json mds = {
        {"max_iters", cfg.dreams.mds.max_iters},
        {"tol", cfg.dreams.mds.tol},
        {"init", cfg.dreams.mds.init == MdsInit::pca ? "pca" : "random"},
        {"output_std", cfg.dreams.mds.output_std},
        {"max_points", cfg.mds_max_points},
    };
    json gen = {
        {"macro", cfg.gen.macro},         {"micro", cfg.gen.micro},         {"per_cluster", cfg.gen.per_cluster},
        {"dim", cfg.gen.dim},             {"macro_sep", cfg.gen.macro_sep}, {"micro_sep", cfg.gen.micro_sep},
        {"noise_sd", cfg.gen.noise_sd},
    };
    return {
        {"input", cfg.input.generic_string()},
        {"format", format_name(cfg.format)},
        {"labels", cfg.labels},
        {"embedding", cfg.embedding.generic_string()},
        {"embedding_format", format_name(cfg.embedding_format)},
        {"method", method_name(cfg.method)},
        {"lambda", cfg.lambda},
        {"lambdas", cfg.lambdas},
        {"pca_dims", cfg.pca_dims},
        {"perplexity", cfg.dreams.perplexity},
        {"neighbors", cfg.dreams.neighbors},
        {"normalization", normalization_name(cfg.dreams.normalization)},
        {"decoder_refit_every", cfg.dreams.decoder_refit_every},
        {"optimizer", optimizer},
        {"mds", mds},
        {"metrics", {{"k", cfg.knn_k}, {"cpd_sample", cfg.cpd_sample}}},
        {"gen", gen},
        {"seed", cfg.seed},
    };
}

void apply_config_json(const json& j, RunConfig& cfg) {
    reject_unknown(j,
                   {"input", "format", "labels", "embedding", "embedding_format", "method", "lambda", "lambdas",
                    "pca_dims", "perplexity", "neighbors", "normalization", "decoder_refit_every", "optimizer",
                    "mds", "metrics", "gen", "seed", "threads", "out"},
                   "config");
    std::string text;
    if (j.contains("input")) {
        read_key(j, "input", text);
        cfg.input = text;
    }
    if (j.contains("embedding")) {
        read_key(j, "embedding", text);
        cfg.embedding = text;
    }
    if (j.contains("out")) {
        read_key(j, "out", text);
        cfg.out = text;
    }
    if (j.contains("format")) {
        read_key(j, "format", text);
        cfg.format = parse_format(text);
    }
    if (j.contains("embedding_format")) {
        read_key(j, "embedding_format", text);
        cfg.embedding_format = parse_format(text);
    }
    if (j.contains("method")) {
        read_key(j, "method", text);
        cfg.method = parse_method(text);
    }
    if (j.contains("normalization")) {
        read_key(j, "normalization", text);
        cfg.dreams.normalization = parse_normalization(text);
    }
    read_key(j, "labels", cfg.labels);
    read_key(j, "lambda", cfg.lambda);
    read_key(j, "lambdas", cfg.lambdas);
    read_key(j, "pca_dims", cfg.pca_dims);
    read_key(j, "perplexity", cfg.dreams.perplexity);
    read_key(j, "neighbors", cfg.dreams.neighbors);
    read_key(j, "decoder_refit_every", cfg.dreams.decoder_refit_every);
    read_key(j, "seed", cfg.seed);
    read_key(j, "threads", cfg.threads);

    if (const auto it = j.find("optimizer"); it != j.end()) {
        reject_unknown(*it,
                       {"total_iters", "ee_iters", "ee_factor", "learning_rate", "momentum_early", "momentum_late",
                        "theta", "min_gain"},
                       "optimizer");
        auto& opt = cfg.dreams.optimizer;
        read_key(*it, "total_iters", opt.total_iters);
        read_key(*it, "ee_iters", opt.ee_iters);
        read_key(*it, "ee_factor", opt.ee_factor);
        if (it->contains("learning_rate")) {
            const auto& lr = (*it)["learning_rate"];
            if (lr.is_null() || (lr.is_string() && lr.get<std::string>() == "auto"))
                opt.learning_rate.reset();
            else if (lr.is_number())
                opt.learning_rate = lr.get<double>();
            else
                throw ConfigError("optimizer.learning_rate must be a number, null or \"auto\"");
        }
        read_key(*it, "momentum_early", opt.momentum_early);
        read_key(*it, "momentum_late", opt.momentum_late);
        read_key(*it, "theta", opt.theta);
        read_key(*it, "min_gain", opt.min_gain);
    }
    if (const auto it = j.find("mds"); it != j.end()) {
        reject_unknown(*it, {"max_iters", "tol", "init", "output_std", "max_points"}, "mds");
        read_key(*it, "max_iters", cfg.dreams.mds.max_iters);
        read_key(*it, "tol", cfg.dreams.mds.tol);
        read_key(*it, "output_std", cfg.dreams.mds.output_std);
        read_key(*it, "max_points", cfg.mds_max_points);
        if (it->contains("init")) {
            std::string init;
            read_key(*it, "init", init);
            if (init == "pca")
                cfg.dreams.mds.init = MdsInit::pca;
            else if (init == "random")
                cfg.dreams.mds.init = MdsInit::random;
            else
                throw ConfigError("mds.init must be \"pca\" or \"random\"");
        }
    }
    if (const auto it = j.find("metrics"); it != j.end()) {
        reject_unknown(*it, {"k", "cpd_sample"}, "metrics");
        read_key(*it, "k", cfg.knn_k);
        read_key(*it, "cpd_sample", cfg.cpd_sample);
    }
    if (const auto it = j.find("gen"); it != j.end()) {
        reject_unknown(*it, {"macro", "micro", "per_cluster", "dim", "macro_sep", "micro_sep", "noise_sd"}, "gen");
        read_key(*it, "macro", cfg.gen.macro);
        read_key(*it, "micro", cfg.gen.micro);
        read_key(*it, "per_cluster", cfg.gen.per_cluster);
        read_key(*it, "dim", cfg.gen.dim);
        read_key(*it, "macro_sep", cfg.gen.macro_sep);
        read_key(*it, "micro_sep", cfg.gen.micro_sep);
        read_key(*it, "noise_sd", cfg.gen.noise_sd);
    }
}

RunConfig load_config_file(const std::filesystem::path& path) {
    RunConfig cfg;
    apply_config_json(read_json(path), cfg);
    return cfg;
}

json report_to_json(const RunReport& r) {
    json j = {
        {"schema_version", r.schema_version},
        {"artifact_version", r.artifact_version},
        {"command", r.command},
        {"config", r.config},
        {"dataset",
         {{"name", r.dataset.name},
          {"rows", r.dataset.rows},
          {"cols", r.dataset.cols},
          {"embedded_cols", r.dataset.embedded_cols}}},
        {"metrics", r.metrics ? metrics_to_json(*r.metrics) : json(nullptr)},
        {"loss_trace", {{"kl", r.kl_trace}, {"penalty", r.penalty_trace}}},
        {"mds_stress", r.mds_stress ? json(*r.mds_stress) : json(nullptr)},
        {"warnings", r.warnings},
        {"timings", r.timings},
    };
    return j;
}

RunReport report_from_json(const json& j) {
    try {
        RunReport r;
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != report_schema_version)
            throw ValidationError("unsupported report schema version " + std::to_string(r.schema_version));
        r.artifact_version = j.at("artifact_version").get<std::string>();
        r.command = j.at("command").get<std::string>();
        r.config = j.at("config");
        const auto& d = j.at("dataset");
        r.dataset.name = d.at("name").get<std::string>();
        r.dataset.rows = d.at("rows").get<Index>();
        r.dataset.cols = d.at("cols").get<Index>();
        r.dataset.embedded_cols = d.at("embedded_cols").get<Index>();
        if (!j.at("metrics").is_null())
            r.metrics = metrics_from_json(j.at("metrics"));
        r.kl_trace = j.at("loss_trace").at("kl").get<std::vector<double>>();
        r.penalty_trace = j.at("loss_trace").at("penalty").get<std::vector<double>>();
        if (!j.at("mds_stress").is_null())
            r.mds_stress = j.at("mds_stress").get<double>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.timings = j.at("timings").get<std::map<std::string, double>>();
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    }
}

json score_table_to_json(const ScoreTable& table, const std::vector<std::optional<double>>& lambdas,
                         const MetricOptions& metrics, std::uint64_t seed) {
    json rows = json::array();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        rows.push_back({{"method", row.method},
                        {"lambda", i < lambdas.size() && lambdas[i] ? json(*lambdas[i]) : json(nullptr)},
                        {"knn", row.knn},
                        {"cpd", row.cpd},
                        {"s", row.s}});
    }
    return {
        {"schema_version", report_schema_version},
        {"rows", rows},
        {"knn_min", table.knn_min},
        {"knn_max", table.knn_max},
        {"cpd_min", table.cpd_min},
        {"cpd_max", table.cpd_max},
        {"knn_degenerate", table.knn_degenerate},
        {"cpd_degenerate", table.cpd_degenerate},
        {"metrics", {{"k", metrics.k}, {"cpd_sample", metrics.cpd_sample}, {"seed", seed}}},
    };
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string format_number(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace dreams
