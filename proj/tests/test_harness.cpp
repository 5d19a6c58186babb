#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "mortarms/harness.hpp"

using namespace mortarms;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

const char* kSmallErrorStudy = R"({
  "seed": 7,
  "threads": 1,
  "geometry": {"N": 2, "n": 3},
  "field": {"builtin": "inclusions", "contrast": 100.0},
  "source": {"value": 1.0},
  "error_study": {"types": ["polynomial", "case2"], "nb_min": 1, "nb_max": 2}
})";

const char* kSmallPrecondStudy = R"({
  "seed": 7,
  "geometry": {"N": 2, "n": 3},
  "field": {"builtin": "channels", "contrast": 50.0},
  "precond_study": {
    "coarse": ["case2"],
    "nb": 2,
    "domains": [1],
    "compositions": ["additive", "hybrid"],
    "solver": "pcg",
    "tol": 1e-8,
    "maxit": 300
  }
})";

}  // namespace

TEST_CASE("name round-trips for basis types and compositions") {
    for (const MortarBasisType t : {MortarBasisType::polynomial, MortarBasisType::case1, MortarBasisType::case2,
                                    MortarBasisType::case3, MortarBasisType::case4}) {
        CHECK(basis_type_from_string(to_string(t)) == t);
    }
    for (const Composition c : {Composition::additive, Composition::hybrid, Composition::hybrid_literal}) {
        CHECK(composition_from_string(to_string(c)) == c);
    }
    CHECK_THROWS_AS(basis_type_from_string("case9"), std::invalid_argument);
    CHECK_THROWS_AS(composition_from_string("multiplicative"), std::invalid_argument);
}

TEST_CASE("config parsing fills defaults and applies overrides") {
    const ExperimentConfig cfg = ExperimentConfig::from_json_text(kSmallErrorStudy);
    CHECK(cfg.seed == 7);
    CHECK(cfg.threads == 1);
    CHECK(cfg.N == 2);
    CHECK(cfg.n == 3);
    CHECK(cfg.field_builtin == "inclusions");
    CHECK(cfg.field_contrast == doctest::Approx(100.0));
    CHECK(cfg.source_value == doctest::Approx(1.0));
    REQUIRE(cfg.error_study.types.size() == 2u);
    CHECK(cfg.error_study.types[0] == MortarBasisType::polynomial);
    CHECK(cfg.error_study.types[1] == MortarBasisType::case2);
    CHECK(cfg.error_study.nb_min == 1);
    CHECK(cfg.error_study.nb_max == 2);
    CHECK(cfg.effective_contrasts() == std::vector<double>{100.0});

    const ExperimentConfig minimal = ExperimentConfig::from_json_text(R"({"geometry": {"N": 3, "n": 4}})");
    CHECK(minimal.seed == 1);
    CHECK(minimal.field_inline);
    CHECK(minimal.effective_contrasts() == std::vector<double>{0.0});
    const GridGeometry g = minimal.make_geometry();
    const PermeabilityField k = minimal.realize(g, 0.0);
    CHECK(k.values.minCoeff() == doctest::Approx(1.0));
    CHECK(k.values.maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("config parsing rejects unknown keys and inconsistent fields") {
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json_text(R"({"geometry": {"N": 2, "n": 2}, "typo": 1})"),
                         doctest::Contains("unknown key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        ExperimentConfig::from_json_text(R"({"geometry": {"N": 2, "n": 2, "depth": 3}})"),
        doctest::Contains("unknown key"), std::invalid_argument);
    // Two field sources at once.
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                        R"({"geometry": {"N": 2, "n": 2},
                            "field": {"builtin": "channels", "raster": "x.txt"}})"),
                    std::invalid_argument);
    // Contrast sweeps need a scalable builtin field.
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                        R"({"geometry": {"N": 2, "n": 2},
                            "field": {"background": 1.0},
                            "contrasts": [10.0, 100.0]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                        R"({"geometry": {"N": 2, "n": 2}, "contrasts": [-1.0],
                            "field": {"builtin": "channels"}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                        R"({"geometry": {"N": 2, "n": 2},
                            "error_study": {"types": ["case1"], "nb_min": 3, "nb_max": 2}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                        R"({"geometry": {"N": 2, "n": 2},
                            "precond_study": {"coarse": ["case1"], "domains": [5]}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                        R"({"geometry": {"N": 2, "n": 2},
                            "precond_study": {"coarse": ["case1"], "solver": "bicg"}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"geometry": {"N": 2, "n": 2}, "threads": 0})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text("not json"), std::invalid_argument);
}

TEST_CASE("the canonical echo is sorted, stable, and hash-terminated") {
    const ExperimentConfig cfg = ExperimentConfig::from_json_text(kSmallErrorStudy);
    const std::string echo = cfg.canonical_echo();
    CHECK(echo == ExperimentConfig::from_json_text(kSmallErrorStudy).canonical_echo());

    std::vector<std::string> lines;
    std::istringstream ss(echo);
    for (std::string line; std::getline(ss, line);) lines.push_back(line);
    REQUIRE(lines.size() > 2u);
    for (std::size_t i = 0; i + 2 < lines.size(); ++i) CHECK(lines[i] < lines[i + 1]);
    CHECK(lines.back().rfind("config_hash=", 0) == 0);
    CHECK(lines.back().size() == std::string("config_hash=").size() + 16u);

    // Key order in the JSON text must not matter.
    const char* reordered = R"({
      "error_study": {"nb_max": 2, "nb_min": 1, "types": ["polynomial", "case2"]},
      "source": {"value": 1.0},
      "field": {"contrast": 100.0, "builtin": "inclusions"},
      "geometry": {"n": 3, "N": 2},
      "threads": 1,
      "seed": 7
    })";
    CHECK(ExperimentConfig::from_json_text(reordered).canonical_echo() == echo);
    CHECK(ExperimentConfig::from_json_text(reordered).hash() == cfg.hash());

    ExperimentConfig other = cfg;
    other.seed = 8;
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("the error study emits one row per case and mode count") {
    ExperimentConfig cfg = ExperimentConfig::from_json_text(kSmallErrorStudy);
    const RunReport report = run_error_study(cfg);
    REQUIRE(report.error_rows.size() == 4u);  // 2 types x Nb in {1, 2}
    CHECK(report.error_rows[0].case_name == "polynomial");
    CHECK(report.error_rows[0].Nb == 1);
    CHECK(report.error_rows[1].Nb == 2);
    CHECK(report.error_rows[2].case_name == "case2");

    for (const ErrorRow& row : report.error_rows) {
        CHECK(row.e_u >= 0.0);
        CHECK(row.e_u < 1.0);
        CHECK(row.e_q >= 0.0);
        CHECK(row.e_q < 1.5);
    }
    // The one-mode space is the same for every basis type.
    CHECK(report.error_rows[0].e_u == doctest::Approx(report.error_rows[2].e_u).epsilon(1e-12));
    CHECK(report.error_rows[0].e_q == doctest::Approx(report.error_rows[2].e_q).epsilon(1e-12));
    // More modes cannot do worse on the same nested basis.
    CHECK(report.error_rows[1].e_u <= report.error_rows[0].e_u + 1e-14);
    CHECK(report.error_rows[3].e_u <= report.error_rows[2].e_u + 1e-14);
}

TEST_CASE("the solver study tags rows and respects the symmetry guard") {
    ExperimentConfig cfg = ExperimentConfig::from_json_text(kSmallPrecondStudy);
    const RunReport report = run_precond_study(cfg);
    REQUIRE(report.iter_rows.size() == 2u);
    CHECK(report.iter_rows[0].preconditioner == "case2-nb2-additive-pcg");
    CHECK(report.iter_rows[1].preconditioner == "case2-nb2-hybrid-pcg");
    for (const IterRow& row : report.iter_rows) {
        CHECK(row.domain == 1);
        CHECK(row.contrast == doctest::Approx(50.0));
        CHECK(row.converged);
        CHECK(row.iterations >= 1);
        CHECK(row.iterations <= 300);
    }

    ExperimentConfig bad = cfg;
    bad.precond_study.domains = {2};
    CHECK_THROWS_WITH_AS(run_precond_study(bad), doctest::Contains("gmres"), std::invalid_argument);

    ExperimentConfig ok = cfg;
    ok.precond_study.domains = {2};
    ok.precond_study.solver = "gmres";
    const RunReport gm = run_precond_study(ok);
    REQUIRE(gm.iter_rows.size() == 2u);
    CHECK(gm.iter_rows[0].preconditioner == "case2-nb2-additive-gmres");
    for (const IterRow& row : gm.iter_rows) CHECK(row.converged);
}

TEST_CASE("csv outputs are byte-identical across thread counts") {
    const auto dir1 = fresh_dir("mortarms_harness_t1");
    const auto dir4 = fresh_dir("mortarms_harness_t4");

    ExperimentConfig cfg = ExperimentConfig::from_json_text(kSmallErrorStudy);
    cfg.contrasts = {10.0, 1000.0};
    ExperimentConfig cfg4 = cfg;
    cfg4.threads = 4;

    RunReport r1 = run_error_study(cfg);
    RunReport r4 = run_error_study(cfg4);
    const ExperimentConfig pcfg = ExperimentConfig::from_json_text(kSmallPrecondStudy);
    ExperimentConfig pcfg4 = pcfg;
    pcfg4.threads = 4;
    const RunReport p1 = run_precond_study(pcfg);
    const RunReport p4 = run_precond_study(pcfg4);
    r1.iter_rows = p1.iter_rows;
    r4.iter_rows = p4.iter_rows;

    emit_outputs(r1, dir1.string());
    emit_outputs(r4, dir4.string());
    for (const char* name : {"errors.csv", "iterations.csv"}) {
        CHECK(slurp(dir1 / name) == slurp(dir4 / name));
    }
    // Thread count is run-relevant but output-invariant; echoes may differ
    // only on the threads line.
    CHECK(slurp(dir1 / "errors.csv").size() > 0u);

    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir4);
}

TEST_CASE("csv files parse back to the rows that produced them") {
    const auto dir = fresh_dir("mortarms_harness_csv");
    RunReport report;
    report.echo = "config_hash=0000000000000000\n";
    report.error_rows.push_back(ErrorRow{"case1", 2, 0.125, 0.25});
    report.error_rows.push_back(ErrorRow{"polynomial", 3, 1.5e-3, 2.0e-6});
    report.iter_rows.push_back(IterRow{1e4, "case2-nb2-additive-pcg", 1, 12, true});
    report.iter_rows.push_back(IterRow{1e6, "case2-nb2-hybrid-gmres", 3, 500, false});
    emit_outputs(report, dir.string());

    const std::string errors = slurp(dir / "errors.csv");
    CHECK(errors == "case,Nb,e_u,e_q\n"
                    "case1,2,0.125,0.25\n"
                    "polynomial,3,0.0015,2e-06\n");
    const std::string iters = slurp(dir / "iterations.csv");
    CHECK(iters == "contrast,preconditioner,domain,iterations,converged\n"
                   "10000,case2-nb2-additive-pcg,1,12,1\n"
                   "1e+06,case2-nb2-hybrid-gmres,3,500,0\n");
    const std::string echo = slurp(dir / "config.echo");
    CHECK(echo == report.echo);
    std::filesystem::remove_all(dir);
}

TEST_CASE("empty reports still produce headers") {
    const auto dir = fresh_dir("mortarms_harness_empty");
    RunReport report;
    report.echo = "config_hash=0\n";
    emit_outputs(report, dir.string());
    CHECK(slurp(dir / "errors.csv") == "case,Nb,e_u,e_q\n");
    CHECK(slurp(dir / "iterations.csv") == "contrast,preconditioner,domain,iterations,converged\n");
    std::filesystem::remove_all(dir);
}

TEST_CASE("contrast sweeps order rows contrast-major") {
    ExperimentConfig cfg = ExperimentConfig::from_json_text(kSmallErrorStudy);
    cfg.contrasts = {10.0, 1000.0};
    const RunReport report = run_error_study(cfg);
    REQUIRE(report.error_rows.size() == 8u);
    CHECK(report.error_rows[0].case_name == "polynomial");
    CHECK(report.error_rows[2].case_name == "case2");
    CHECK(report.error_rows[4].case_name == "polynomial");  // second contrast
    // Same schema, but the two sweeps generally differ in values.
    bool any_diff = false;
    for (int i = 0; i < 4; ++i) {
        if (report.error_rows[static_cast<std::size_t>(i)].e_u !=
            report.error_rows[static_cast<std::size_t>(i + 4)].e_u) {
            any_diff = true;
        }
    }
    CHECK(any_diff);
}

TEST_CASE("field dumps have the documented shapes") {
    const auto dir = fresh_dir("mortarms_harness_fields");
    const GridGeometry g = build_geometry(2, 2);
    PermeabilityField k;
    k.values = Eigen::VectorXd::Ones(g.num_cells());
    const SourceField f = realize_source_constant(1.0, g);
    const GlobalSolution sol = monolithic_fine_solve(g, k, f);
    write_field_dumps(g, sol, dir.string());

    const std::string u = slurp(dir / "u_field.txt");
    CHECK(u.rfind("4 4", 0) == 0);

    std::istringstream flux(slurp(dir / "flux_field.txt"));
    std::string word;
    int rows = 0, cols = 0;
    flux >> word >> rows >> cols;
    CHECK(word == "horizontal");
    CHECK(rows == g.Nf + 1);
    CHECK(cols == g.Nf);
    double v = 0.0;
    for (int i = 0; i < rows * cols; ++i) REQUIRE((flux >> v));
    flux >> word >> rows >> cols;
    CHECK(word == "vertical");
    CHECK(rows == g.Nf);
    CHECK(cols == g.Nf + 1);
    for (int i = 0; i < rows * cols; ++i) REQUIRE((flux >> v));
    std::filesystem::remove_all(dir);
}

TEST_CASE("significant-digit formatting matches printf semantics") {
    CHECK(format_sig6(0.125) == "0.125");
    CHECK(format_sig6(2e-6) == "2e-06");
    CHECK(format_sig6(1e6) == "1e+06");
    CHECK(format_sig6(123456789.0) == "1.23457e+08");
    CHECK(format_sig6(0.0) == "0");
}
