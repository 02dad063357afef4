#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <regex>
#include <sstream>

#include "dreams/cli.hpp"
#include "dreams/parallel.hpp"
#include "dreams/svg.hpp"
#include "support.hpp"
#include "xml_check.hpp"

using namespace dreams;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

// Small problem: 90 points in 10 dimensions with a short optimization.
json small_config() {
    return {
        {"gen", {{"macro", 3}, {"micro", 2}, {"per_cluster", 15}, {"dim", 10}}},
        {"perplexity", 10},
        {"optimizer", {{"total_iters", 200}, {"ee_iters", 50}}},
        {"metrics", {{"k", 10}, {"cpd_sample", 90}}},
        {"labels", true},
    };
}

fs::path write_config(const fs::path& dir, const json& j) {
    write_json(dir / "config.json", j);
    return dir / "config.json";
}

// Generates the small dataset once per scratch directory and returns its path.
fs::path generated(const fs::path& dir) {
    const auto cfg = write_config(dir, small_config());
    REQUIRE(cli({"gen", "--config", cfg.string(), "--seed", "4", "--out", (dir / "gen").string()}).code == 0);
    return dir / "gen" / "data.csv";
}

json without_timings(json j) {
    j.erase("timings");
    return j;
}

// Numbers compare within a relative tolerance; everything else exactly.
bool json_close(const json& a, const json& b, double tol) {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>(), y = b.get<double>();
        return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)});
    }
    if (a.type() != b.type())
        return false;
    if (a.is_object()) {
        if (a.size() != b.size())
            return false;
        for (const auto& [key, value] : a.items())
            if (!b.contains(key) || !json_close(value, b.at(key), tol))
                return false;
        return true;
    }
    if (a.is_array()) {
        if (a.size() != b.size())
            return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!json_close(a[i], b[i], tol))
                return false;
        return true;
    }
    return a == b;
}

} // namespace

TEST_CASE("help, version and usage errors") {
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"--version"}).code == 0);
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"embed", "--seed", "abc"}).code == 2);
}

TEST_CASE("gen writes the dataset files") {
    const auto dir = test::scratch_dir("cli_gen");
    const auto data = generated(dir);
    const auto ds = load_matrix(data, {MatrixFormat::csv, true});
    CHECK(ds.data.rows() == 90);
    CHECK(ds.data.cols() == 10);
    CHECK(load_matrix(dir / "gen" / "data.f64", {MatrixFormat::raw_f64, false}).data == ds.data);
    const json meta = read_json(dir / "gen" / "gen.json");
    CHECK(meta["rows"] == 90);
    CHECK(meta["config"]["seed"] == 4);
}

TEST_CASE("embed input and config errors exit with code 2") {
    const auto dir = test::scratch_dir("cli_errors");
    const auto data = generated(dir);
    const std::string cfg = (dir / "config.json").string();
    const std::string out = (dir / "out").string();
    CHECK(cli({"embed", "--config", cfg, "--input", (dir / "missing.csv").string(), "--out", out}).code == 2);
    CHECK(cli({"embed", "--config", cfg, "--input", data.string(), "--method", "umap", "--out", out}).code == 2);
    CHECK(cli({"embed", "--config", cfg, "--input", data.string(), "--lambda", "1.5", "--out", out}).code == 2);
    CHECK(cli({"embed", "--out", out}).code == 2);
    CHECK(cli({"embed", "--config", (dir / "nope.json").string()}).code == 2);

    write_json(dir / "typo.json", json{{"lamda", 0.1}});
    const Run typo = cli({"embed", "--config", (dir / "typo.json").string(), "--input", data.string()});
    CHECK(typo.code == 2);
    CHECK(typo.err.find("lamda") != std::string::npos);

    std::ofstream(dir / "ragged.csv") << "1,2,3\n4,5\n";
    CHECK(cli({"embed", "--input", (dir / "ragged.csv").string(), "--out", out}).code == 2);
}

TEST_CASE("divergence exits with code 3") {
    const auto dir = test::scratch_dir("cli_divergence");
    const auto data = generated(dir);
    json cfg = small_config();
    cfg["optimizer"]["learning_rate"] = 1e308;
    const auto path = write_config(dir, cfg);
    const Run r = cli({"embed", "--config", path.string(), "--input", data.string(), "--method", "tsne", "--out",
                       (dir / "out").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("embed with method pca writes the normalized PCA projection") {
    const auto dir = test::scratch_dir("cli_pca");
    const auto data = generated(dir);
    const std::string cfg = (dir / "config.json").string();
    REQUIRE(cli({"embed", "--config", cfg, "--input", data.string(), "--method", "pca", "--out",
                 (dir / "pca").string()})
                .code == 0);
    const auto Y = load_matrix(dir / "pca" / "embedding.csv").data;
    const auto X = load_matrix(data, {MatrixFormat::csv, true}).data;
    CHECK((Y - normalize_by_pc1_std(project(fit_pca(X, 2), X))).cwiseAbs().maxCoeff() == 0.0);

    const std::string svg = test::slurp(dir / "pca" / "plot.svg");
    CHECK(test::xml_problem(svg).empty());
    CHECK(test::count_occurrences(svg, "<circle") == 90);
    CHECK(test::count_occurrences(svg, unlabeled_color) == 0);

    const RunReport report = report_from_json(read_json(dir / "pca" / "report.json"));
    REQUIRE(report.metrics);
    CHECK(report.metrics->knn > 0);
    CHECK(report.command == "embed");
    CHECK(report.dataset.rows == 90);
    CHECK(report.kl_trace.empty());
}

TEST_CASE("lambda is ignored with a warning for non-dreams methods") {
    const auto dir = test::scratch_dir("cli_warn");
    const auto data = generated(dir);
    const Run r = cli({"embed", "--config", (dir / "config.json").string(), "--input", data.string(), "--method",
                       "pca", "--lambda", "0.7", "--out", (dir / "o").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("lambda is ignored") != std::string::npos);
    const RunReport report = report_from_json(read_json(dir / "o" / "report.json"));
    REQUIRE(report.warnings.size() == 1);
}

TEST_CASE("dreams-pca with lambda 0 reproduces tsne") {
    const auto dir = test::scratch_dir("cli_corner");
    const auto data = generated(dir);
    const std::string cfg = (dir / "config.json").string();
    REQUIRE(cli({"embed", "--config", cfg, "--input", data.string(), "--method", "tsne", "--out",
                 (dir / "tsne").string()})
                .code == 0);
    REQUIRE(cli({"embed", "--config", cfg, "--input", data.string(), "--method", "dreams-pca", "--lambda", "0",
                 "--out", (dir / "zero").string()})
                .code == 0);
    CHECK(test::slurp(dir / "tsne" / "embedding.csv") == test::slurp(dir / "zero" / "embedding.csv"));
}

TEST_CASE("embed is deterministic across reruns and thread counts") {
    const auto dir = test::scratch_dir("cli_determinism");
    const auto data = generated(dir);
    const std::string cfg = (dir / "config.json").string();
    for (const std::string method : {"dreams-pca", "dreams-decoder", "dreams-mds"}) {
        std::vector<std::string> embeddings, reports;
        for (const std::string threads : {"1", "2", "3", "1"}) {
            const fs::path out = dir / (method + "_" + threads + "_" + std::to_string(embeddings.size()));
            REQUIRE(cli({"embed", "--config", cfg, "--input", data.string(), "--method", method, "--threads", threads,
                         "--out", out.string()})
                        .code == 0);
            embeddings.push_back(test::slurp(out / "embedding.csv"));
            reports.push_back(without_timings(read_json(out / "report.json")).dump());
        }
        for (std::size_t i = 1; i < embeddings.size(); ++i) {
            CHECK(embeddings[i] == embeddings[0]);
            CHECK(reports[i] == reports[0]);
        }
    }
    set_num_threads(0);
}

TEST_CASE("DREAMS_THREADS is the fallback worker count") {
    setenv("DREAMS_THREADS", "3", 1);
    set_num_threads(0);
    CHECK(num_threads() == 3);
    set_num_threads(2);
    CHECK(num_threads() == 2);
    unsetenv("DREAMS_THREADS");
    set_num_threads(0);
    CHECK(num_threads() == 1);
}

TEST_CASE("MDS inputs above the size cap are subsampled with a warning") {
    const auto dir = test::scratch_dir("cli_mds");
    const auto data = generated(dir);
    json cfg = small_config();
    cfg["mds"] = {{"max_points", 40}};
    const auto path = write_config(dir, cfg);
    const Run r = cli({"embed", "--config", path.string(), "--input", data.string(), "--method", "mds", "--out",
                       (dir / "o").string()});
    REQUIRE(r.code == 0);
    CHECK(load_matrix(dir / "o" / "embedding.csv").data.rows() == 40);
    const RunReport report = report_from_json(read_json(dir / "o" / "report.json"));
    CHECK(report.mds_stress);
    CHECK(report.warnings.size() == 1);
    CHECK(report.dataset.rows == 40);
}

TEST_CASE("sweep writes per-lambda outputs, a score table and a spectrum") {
    const auto dir = test::scratch_dir("cli_sweep");
    const auto data = generated(dir);
    const fs::path out = dir / "sweep";
    const Run r = cli({"sweep", "--config", (dir / "config.json").string(), "--input", data.string(), "--lambdas",
                       "1,0,0.3", "--out", out.string()});
    REQUIRE(r.code == 0);
    for (const char* sub : {"lambda_0", "lambda_0.3", "lambda_1"}) {
        CHECK(fs::exists(out / sub / "embedding.csv"));
        CHECK(fs::exists(out / sub / "report.json"));
        CHECK(fs::exists(out / sub / "plot.svg"));
    }
    const json table = read_json(out / "score_table.json");
    REQUIRE(table["rows"].size() == 5);
    std::vector<std::string> methods;
    for (const auto& row : table["rows"])
        methods.push_back(row["method"]);
    CHECK(methods == std::vector<std::string>{"dreams-pca", "dreams-pca", "dreams-pca", "tsne", "pca"});

    // lambda = 0 matches the tsne baseline and lambda = 1 the pca baseline.
    const auto& rows = table["rows"];
    CHECK(rows[0]["lambda"] == 0.0);
    CHECK(rows[0]["knn"] == rows[3]["knn"]);
    CHECK(rows[0]["cpd"] == rows[3]["cpd"]);
    CHECK(rows[2]["lambda"] == 1.0);
    CHECK(std::abs(rows[2]["cpd"].get<double>() - rows[4]["cpd"].get<double>()) < 1e-3);

    double kmin = 1e9, kmax = -1e9, cmin = 1e9, cmax = -1e9;
    for (const auto& row : rows) {
        kmin = std::min(kmin, row["knn"].get<double>());
        kmax = std::max(kmax, row["knn"].get<double>());
        cmin = std::min(cmin, row["cpd"].get<double>());
        cmax = std::max(cmax, row["cpd"].get<double>());
    }
    for (const auto& row : rows)
        CHECK(row["s"].get<double>() ==
              ((row["knn"].get<double>() - kmin) / (kmax - kmin) + (row["cpd"].get<double>() - cmin) / (cmax - cmin)) / 2);

    const std::string svg = test::slurp(out / "spectrum.svg");
    CHECK(test::xml_problem(svg).empty());
    CHECK(test::count_occurrences(svg, "class=\"panel\"") == 3);
    CHECK(test::count_occurrences(svg, "<circle") == 270);
    const auto first = svg.find("data-lambda=\"0\""), mid = svg.find("data-lambda=\"0.3\""),
               last = svg.find("data-lambda=\"1\"");
    CHECK(first < mid);
    CHECK(mid < last);

    CHECK(cli({"sweep", "--config", (dir / "config.json").string(), "--input", data.string(), "--method", "tsne",
               "--out", out.string()})
              .code == 2);
}

TEST_CASE("metrics command") {
    const auto dir = test::scratch_dir("cli_metrics");
    const auto data = generated(dir);
    const auto X = load_matrix(data, {MatrixFormat::csv, true}).data;
    save_csv(dir / "pcs.csv", project(fit_pca(X, 2), X));
    const std::string cfg = (dir / "config.json").string();
    REQUIRE(cli({"metrics", "--config", cfg, "--input", data.string(), "--embedding", (dir / "pcs.csv").string(),
                 "--out", (dir / "m").string()})
                .code == 0);
    const RunReport report = report_from_json(read_json(dir / "m" / "report.json"));
    REQUIRE(report.metrics);
    CHECK(report.metrics->cpd > 0);
    CHECK(report.metrics->cpd <= 1);
    CHECK(report.metrics->knn > 0);
    CHECK(report.metrics->knn <= 1);

    save_csv(dir / "short.csv", project(fit_pca(X, 2), X).topRows(50));
    CHECK(cli({"metrics", "--config", cfg, "--input", data.string(), "--embedding", (dir / "short.csv").string(),
               "--out", (dir / "m2").string()})
              .code == 2);
    CHECK(cli({"metrics", "--config", cfg, "--input", data.string(), "--out", (dir / "m3").string()}).code == 2);
}

TEST_CASE("gen, embed and metrics reproduce the golden report") {
    const auto dir = test::scratch_dir("cli_golden");
    const auto data = generated(dir);
    const std::string cfg = (dir / "config.json").string();
    REQUIRE(cli({"embed", "--config", cfg, "--input", data.string(), "--method", "dreams-pca", "--lambda", "0.1",
                 "--seed", "4", "--out", (dir / "embed").string()})
                .code == 0);
    REQUIRE(cli({"metrics", "--config", cfg, "--input", data.string(), "--embedding",
                 (dir / "embed" / "embedding.csv").string(), "--seed", "4", "--out", (dir / "metrics").string()})
                .code == 0);

    json embed_report = without_timings(read_json(dir / "embed" / "report.json"));
    json metrics_report = without_timings(read_json(dir / "metrics" / "report.json"));
    CHECK(embed_report["metrics"] == metrics_report["metrics"]);
    // Paths depend on the scratch location.
    for (json* j : {&embed_report, &metrics_report}) {
        (*j)["config"].erase("input");
        (*j)["config"].erase("embedding");
        (*j)["dataset"].erase("name");
    }
    const json actual = {{"embed", embed_report}, {"metrics", metrics_report}};
    const fs::path golden = fs::path(DREAMS_TEST_GOLDEN_DIR) / "pipeline.json";
    if (std::getenv("DREAMS_UPDATE_GOLDEN")) {
        write_json(golden, actual);
        WARN("golden file rewritten: " << golden);
    }
    REQUIRE(fs::exists(golden));
    CHECK(json_close(actual, read_json(golden), 1e-9));
}
