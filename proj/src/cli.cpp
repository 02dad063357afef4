#include "dreams/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"

#include "dreams/dreams.hpp"
#include "dreams/parallel.hpp"
#include "dreams/svg.hpp"

namespace dreams {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
}

fs::path ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::optional<ReferenceKind> reference_kind(Method method) {
    switch (method) {
    case Method::dreams_pca: return ReferenceKind::pca;
    case Method::dreams_mds: return ReferenceKind::mds;
    case Method::dreams_decoder: return ReferenceKind::decoder;
    default: return std::nullopt;
    }
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ConfigError("lambda must lie in [0, 1], got " + format_number(lambda));
}

// Keeps at most cfg.mds_max_points rows (in their original order) for methods that need O(n^2) MDS.
void subsample_for_mds(const RunConfig& cfg, PreparedData& data) {
    const Index n = data.embedded.rows();
    if (cfg.mds_max_points < 3 || n <= cfg.mds_max_points)
        return;
    Rng rng(Rng::derive(cfg.seed, 1));
    auto keep = sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(cfg.mds_max_points),
                                           rng);
    std::sort(keep.begin(), keep.end());
    DataMatrix reduced(static_cast<Index>(keep.size()), data.embedded.cols());
    DataMatrix original(static_cast<Index>(keep.size()), data.dataset.data.cols());
    std::optional<std::vector<int>> labels;
    if (data.dataset.labels)
        labels.emplace();
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const auto i = static_cast<Index>(keep[r]);
        reduced.row(static_cast<Index>(r)) = data.embedded.row(i);
        original.row(static_cast<Index>(r)) = data.dataset.data.row(i);
        if (labels)
            labels->push_back((*data.dataset.labels)[keep[r]]);
    }
    data.warnings.push_back("input has " + std::to_string(n) + " rows; MDS uses a random subsample of " +
                            std::to_string(keep.size()));
    data.embedded = std::move(reduced);
    data.dataset.data = std::move(original);
    data.dataset.labels = std::move(labels);
}

struct MethodRun {
    Embedding<double> embedding;
    std::vector<double> kl_trace;
    std::vector<double> penalty_trace;
    std::optional<double> mds_stress;
};

MethodRun run_method(const RunConfig& cfg, const DataMatrix& X) {
    MethodRun run;
    Rng rng(Rng::derive(cfg.seed, 2));
    switch (cfg.method) {
    case Method::pca: run.embedding = pca_reference(X); break;
    case Method::mds: {
        auto mds = smacof(X, cfg.dreams.mds, rng);
        run.embedding = std::move(mds.embedding);
        run.mds_stress = mds.stress;
        break;
    }
    case Method::tsne: {
        auto r = run_tsne(X, cfg.dreams);
        run.embedding = std::move(r.embedding);
        run.kl_trace = std::move(r.kl_trace);
        break;
    }
    default: {
        const auto setup = prepare_dreams(X, cfg.dreams, *reference_kind(cfg.method), rng);
        auto r = run_dreams(setup, cfg.dreams, cfg.lambda);
        run.embedding = std::move(r.embedding);
        run.kl_trace = std::move(r.kl_trace);
        run.penalty_trace = std::move(r.penalty_trace);
        run.mds_stress = setup.mds_stress;
    }
    }
    return run;
}

RunReport base_report(const RunConfig& cfg, const std::string& command, const PreparedData& data) {
    RunReport report;
    report.artifact_version = DREAMS_VERSION;
    report.command = command;
    report.config = config_to_json(cfg);
    report.dataset = {data.dataset.name, data.dataset.data.rows(), data.dataset.data.cols(), data.embedded.cols()};
    report.warnings = data.warnings;
    return report;
}

void write_outputs(const fs::path& dir, const Embedding<double>& Y, const std::optional<std::vector<int>>& labels,
                   const RunReport& report) {
    save_csv(dir / "embedding.csv", Y);
    write_text(dir / "plot.svg", scatter_svg(Y, labels));
    write_json(dir / "report.json", report_to_json(report));
}

void print_metrics(std::ostream& out, const std::string& what, const MetricReport& m) {
    out << what << ": knn=" << format_number(m.knn) << " cpd=" << format_number(m.cpd) << '\n';
}

} // namespace

PreparedData prepare_input(const RunConfig& cfg) {
    if (cfg.input.empty())
        throw ConfigError("no input file given (use --input or the \"input\" config key)");
    PreparedData data;
    data.dataset = load_matrix(cfg.input, {cfg.format, cfg.labels});
    if (data.dataset.data.rows() < 3)
        throw ValidationError("input must have at least three rows");
    if (cfg.pca_dims < 0)
        throw ConfigError("pca_dims must be non-negative");
    if (cfg.pca_dims > 0 && data.dataset.data.cols() > cfg.pca_dims) {
        const Index d = std::min(cfg.pca_dims, data.dataset.data.rows());
        data.embedded = project(fit_pca(data.dataset.data, d), data.dataset.data);
    } else {
        data.embedded = data.dataset.data;
    }
    return data;
}

int cmd_gen(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir = ensure_dir(cfg.out);
    Rng rng(cfg.seed);
    const Dataset ds = gen_hierarchical(cfg.gen, rng);
    save_csv(dir / "data.csv", ds.data, ds.labels);
    save_raw_f64(dir / "data.f64", ds.data);
    nlohmann::json meta = {
        {"artifact_version", DREAMS_VERSION},
        {"command", "gen"},
        {"config", config_to_json(cfg)},
        {"rows", ds.data.rows()},
        {"cols", ds.data.cols()},
        {"files", {{"csv_with_labels", "data.csv"}, {"raw_f64", "data.f64"}}},
    };
    write_json(dir / "gen.json", meta);
    out << "generated " << ds.data.rows() << " x " << ds.data.cols() << " -> " << (dir / "data.csv").string() << '\n';
    return exit_ok;
}

int cmd_embed(const RunConfig& cfg, std::ostream& out) {
    Stopwatch clock;
    PreparedData data = prepare_input(cfg);
    if (uses_lambda(cfg.method))
        check_lambda(cfg.lambda);
    else if (cfg.lambda != RunConfig{}.lambda)
        data.warnings.push_back("lambda is ignored for method " + method_name(cfg.method));
    if (cfg.method == Method::mds || cfg.method == Method::dreams_mds)
        subsample_for_mds(cfg, data);
    const double t_load = clock.lap();

    const MethodRun run = run_method(cfg, data.embedded);
    const double t_embed = clock.lap();

    RunReport report = base_report(cfg, "embed", data);
    report.metrics = evaluate(data.embedded, run.embedding, cfg.seed, cfg.knn_k, cfg.cpd_sample);
    const double t_metrics = clock.lap();
    report.kl_trace = run.kl_trace;
    report.penalty_trace = run.penalty_trace;
    report.mds_stress = run.mds_stress;
    report.timings = {{"load", t_load}, {"embed", t_embed}, {"metrics", t_metrics}};

    const fs::path dir = ensure_dir(cfg.out);
    write_outputs(dir, run.embedding, data.dataset.labels, report);
    print_metrics(out, method_name(cfg.method), *report.metrics);
    for (const auto& w : report.warnings)
        out << "warning: " << w << '\n';
    return exit_ok;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    const auto kind = reference_kind(cfg.method);
    if (!kind)
        throw ConfigError("sweep needs a dreams method (dreams-pca, dreams-mds or dreams-decoder), got " +
                          method_name(cfg.method));
    if (cfg.lambdas.empty())
        throw ConfigError("sweep needs at least one lambda");
    for (double l : cfg.lambdas)
        check_lambda(l);
    std::vector<double> lambdas = cfg.lambdas;
    std::sort(lambdas.begin(), lambdas.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

    Stopwatch clock;
    PreparedData data = prepare_input(cfg);
    if (*kind == ReferenceKind::mds)
        subsample_for_mds(cfg, data);
    const double t_load = clock.lap();
    const fs::path dir = ensure_dir(cfg.out);

    Rng rng(Rng::derive(cfg.seed, 2));
    const auto setup = prepare_dreams(data.embedded, cfg.dreams, *kind, rng);
    const double t_setup = clock.lap();
    const MetricOptions metric_options{cfg.knn_k, cfg.cpd_sample};

    std::vector<MethodScore> scores;
    std::vector<std::optional<double>> score_lambdas;
    std::vector<SpectrumPanel> panels;
    std::optional<DreamsResult<double>> tsne_from_sweep;
    const std::string method = method_name(cfg.method);

    for (double lambda : lambdas) {
        auto r = run_dreams(setup, cfg.dreams, lambda);
        const double t_embed = clock.lap();
        RunConfig entry_cfg = cfg;
        entry_cfg.lambda = lambda;
        RunReport report = base_report(entry_cfg, "sweep", data);
        report.metrics = evaluate(data.embedded, r.embedding, cfg.seed, metric_options.k, metric_options.cpd_sample);
        report.kl_trace = r.kl_trace;
        report.penalty_trace = r.penalty_trace;
        report.mds_stress = setup.mds_stress;
        report.timings = {{"embed", t_embed}, {"metrics", clock.lap()}};
        write_outputs(ensure_dir(dir / ("lambda_" + format_number(lambda))), r.embedding, data.dataset.labels, report);
        print_metrics(out, method + " lambda=" + format_number(lambda), *report.metrics);

        scores.push_back({method, report.metrics->knn, report.metrics->cpd, 0});
        score_lambdas.push_back(lambda);
        panels.push_back({lambda, r.embedding});
        // With a PCA-initialized reference, lambda = 0 is plain t-SNE.
        if (lambda == 0.0 && *kind != ReferenceKind::mds)
            tsne_from_sweep = std::move(r);
    }

    const Embedding<double> tsne =
        tsne_from_sweep ? tsne_from_sweep->embedding : run_tsne(data.embedded, cfg.dreams).embedding;
    const Embedding<double> pca = pca_reference(data.embedded);
    std::vector<std::pair<std::string, const Embedding<double>*>> baselines = {{"tsne", &tsne}, {"pca", &pca}};
    if (*kind == ReferenceKind::mds)
        baselines.emplace_back("mds", &setup.reference);
    for (const auto& [name, Y] : baselines) {
        const auto m = evaluate(data.embedded, *Y, cfg.seed, metric_options.k, metric_options.cpd_sample);
        print_metrics(out, name, m);
        scores.push_back({name, m.knn, m.cpd, 0});
        score_lambdas.emplace_back();
    }
    const double t_baselines = clock.lap();

    const ScoreTable table = aggregate_scores(scores);
    nlohmann::json table_json = score_table_to_json(table, score_lambdas, metric_options, cfg.seed);
    table_json["artifact_version"] = DREAMS_VERSION;
    table_json["config"] = config_to_json(cfg);
    table_json["warnings"] = data.warnings;
    table_json["timings"] = {{"load", t_load}, {"setup", t_setup}, {"baselines", t_baselines}};
    write_json(dir / "score_table.json", table_json);
    write_text(dir / "spectrum.svg", spectrum_svg(std::move(panels), data.dataset.labels));

    const auto& best = table.best();
    const auto best_index = static_cast<std::size_t>(&best - table.rows.data());
    out << "best: " << best.method;
    if (score_lambdas[best_index])
        out << " lambda=" << format_number(*score_lambdas[best_index]);
    out << " s=" << format_number(best.s) << '\n';
    return exit_ok;
}

int cmd_metrics(const RunConfig& cfg, std::ostream& out) {
    if (cfg.embedding.empty())
        throw ConfigError("no embedding file given (use --embedding or the \"embedding\" config key)");
    Stopwatch clock;
    const PreparedData data = prepare_input(cfg);
    const Dataset Y = load_matrix(cfg.embedding, {cfg.embedding_format, false});
    if (Y.data.rows() != data.embedded.rows())
        throw ShapeError("embedding has " + std::to_string(Y.data.rows()) + " rows but the data has " +
                         std::to_string(data.embedded.rows()));
    const double t_load = clock.lap();
    RunReport report = base_report(cfg, "metrics", data);
    report.metrics = evaluate(data.embedded, Y.data, cfg.seed, cfg.knn_k, cfg.cpd_sample);
    report.timings = {{"load", t_load}, {"metrics", clock.lap()}};
    write_json(ensure_dir(cfg.out) / "report.json", report_to_json(report));
    print_metrics(out, "metrics", *report.metrics);
    return exit_ok;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Regularized t-SNE embeddings anchored to a global reference", "dreams"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(DREAMS_VERSION));

    std::string config_file, input, format, embedding, embedding_format, method, normalization, out_dir;
    bool labels = false;
    double lambda = 0, perplexity = 0;
    std::vector<double> lambdas;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    Index pca_dims = 0, iters = 0, cpd_sample = 0, knn_k = 0;

    std::vector<CLI::Option*> opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Random seed");
        sub->add_option("--threads", threads, "Worker threads (default: DREAMS_THREADS or 1)");
        sub->add_option("--out", out_dir, "Output directory");
    };
    auto add_input = [&](CLI::App* sub) {
        sub->add_option("--input,-i", input, "Data matrix");
        sub->add_option("--format", format, "Input format: csv or raw-f64");
        sub->add_flag("--labels", labels, "CSV input ends with an integer label column");
        sub->add_option("--pca-dims", pca_dims, "Reduce wider inputs to this many principal components (0: off)");
        sub->add_option("--k", knn_k, "Neighbors for KNN recall");
        sub->add_option("--cpd-sample", cpd_sample, "Points sampled for CPD");
    };
    auto add_embedding = [&](CLI::App* sub) {
        sub->add_option("--method,-m", method, "tsne, pca, mds, dreams-pca, dreams-mds or dreams-decoder");
        sub->add_option("--perplexity", perplexity, "Perplexity of the input affinities");
        sub->add_option("--iters", iters, "Total optimizer iterations");
        sub->add_option("--normalization", normalization, "Penalty normalization: mean, per-point or sum");
    };

    CLI::App* gen = app.add_subcommand("gen", "Generate the hierarchical Gaussian mixture dataset");
    add_common(gen);
    CLI::App* embed = app.add_subcommand("embed", "Embed a dataset in two dimensions");
    add_common(embed);
    add_input(embed);
    add_embedding(embed);
    embed->add_option("--lambda,-l", lambda, "Regularization strength in [0, 1]");
    CLI::App* sweep = app.add_subcommand("sweep", "Embed for a list of lambdas and score them against baselines");
    add_common(sweep);
    add_input(sweep);
    add_embedding(sweep);
    sweep->add_option("--lambdas", lambdas, "Comma-separated lambda values")->delimiter(',');
    CLI::App* metrics = app.add_subcommand("metrics", "Evaluate an existing embedding against its data");
    add_common(metrics);
    add_input(metrics);
    metrics->add_option("--embedding,-e", embedding, "Embedding matrix");
    metrics->add_option("--embedding-format", embedding_format, "Embedding format: csv or raw-f64");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input_error;
    }

    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const char* name) { return sub->get_option_no_throw(name) && sub->count(name) > 0; };
    try {
        RunConfig cfg = config_file.empty() ? RunConfig{} : load_config_file(config_file);
        if (given("--seed"))
            cfg.seed = seed;
        if (given("--threads"))
            cfg.threads = threads;
        if (given("--out"))
            cfg.out = out_dir;
        if (given("--input"))
            cfg.input = input;
        if (given("--format"))
            cfg.format = parse_format(format);
        if (labels)
            cfg.labels = true;
        if (given("--pca-dims"))
            cfg.pca_dims = pca_dims;
        if (given("--k"))
            cfg.knn_k = knn_k;
        if (given("--cpd-sample"))
            cfg.cpd_sample = cpd_sample;
        if (given("--method"))
            cfg.method = parse_method(method);
        if (given("--perplexity"))
            cfg.dreams.perplexity = perplexity;
        if (given("--iters"))
            cfg.dreams.optimizer.total_iters = iters;
        if (given("--normalization"))
            cfg.dreams.normalization = parse_normalization(normalization);
        if (given("--lambda"))
            cfg.lambda = lambda;
        if (given("--lambdas"))
            cfg.lambdas = lambdas;
        if (given("--embedding"))
            cfg.embedding = embedding;
        if (given("--embedding-format"))
            cfg.embedding_format = parse_format(embedding_format);

        set_num_threads(cfg.threads);
        const std::string name = sub->get_name();
        if (name == "gen")
            return cmd_gen(cfg, out);
        if (name == "embed")
            return cmd_embed(cfg, out);
        if (name == "sweep")
            return cmd_sweep(cfg, out);
        return cmd_metrics(cfg, out);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return exit_divergence;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_input_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_input_error;
    }
}

} // namespace dreams
