#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mortarms/harness.hpp"
#include "mortarms/local_mixed.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--seed", args.seed, "seed override")->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads, "worker thread count override")->check(CLI::PositiveNumber);
}

mortarms::ExperimentConfig load(const CommonArgs& args) {
    mortarms::ExperimentConfig cfg = mortarms::ExperimentConfig::from_json_file(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    if (args.threads > 0) cfg.threads = args.threads;
    if (!args.out_dir.empty()) cfg.output.dir = args.out_dir;
    return cfg;
}

void write_echo(const mortarms::ExperimentConfig& cfg) {
    mortarms::RunReport rep;
    rep.echo = cfg.canonical_echo();
    mortarms::emit_outputs(rep, cfg.output.dir);
}

int run_solve(const CommonArgs& args) {
    const mortarms::ExperimentConfig cfg = load(args);
    const mortarms::GridGeometry geom = cfg.make_geometry();
    const double eta = cfg.effective_contrasts().front();
    const mortarms::PermeabilityField kappa = cfg.realize(geom, eta);
    const mortarms::SourceField f = cfg.make_source(geom);
    const mortarms::GlobalSolution sol = mortarms::monolithic_fine_solve(geom, kappa, f);
    mortarms::write_field_dumps(geom, sol, cfg.output.dir);
    write_echo(cfg);
    std::cout << "fine solve: " << geom.Nf << "x" << geom.Nf << " cells, conservation violation "
              << mortarms::format_sig6(mortarms::max_conservation_violation(geom, sol, f)) << "\n"
              << "fields written to " << cfg.output.dir << "\n";
    return 0;
}

int run_errors(const CommonArgs& args) {
    const mortarms::ExperimentConfig cfg = load(args);
    const mortarms::RunReport rep = mortarms::run_error_study(cfg);
    mortarms::emit_outputs(rep, cfg.output.dir);
    if (cfg.output.fields) {
        const mortarms::GridGeometry geom = cfg.make_geometry();
        const mortarms::PermeabilityField kappa = cfg.realize(geom, cfg.effective_contrasts().front());
        const mortarms::SourceField f = cfg.make_source(geom);
        mortarms::write_field_dumps(geom, mortarms::monolithic_fine_solve(geom, kappa, f), cfg.output.dir);
    }
    std::cout << rep.error_rows.size() << " error rows written to " << cfg.output.dir << "/errors.csv\n";
    return 0;
}

int run_precond(const CommonArgs& args) {
    const mortarms::ExperimentConfig cfg = load(args);
    const mortarms::RunReport rep = mortarms::run_precond_study(cfg);
    mortarms::emit_outputs(rep, cfg.output.dir);
    std::cout << rep.iter_rows.size() << " iteration rows written to " << cfg.output.dir << "/iterations.csv\n";
    return 0;
}

int run_snapshots(const CommonArgs& args) {
    const mortarms::ExperimentConfig cfg = load(args);
    if (cfg.error_study.types.empty()) {
        throw std::runtime_error("snapshots verb exports the bases listed under error_study.types; none configured");
    }
    const mortarms::GridGeometry geom = cfg.make_geometry();
    const mortarms::PermeabilityField kappa = cfg.realize(geom, cfg.effective_contrasts().front());
    write_echo(cfg);
    for (const mortarms::MortarBasisType type : cfg.error_study.types) {
        const mortarms::MortarBasis basis =
            mortarms::build_basis_for_type(geom, kappa, type, cfg.error_study.nb_max, cfg.seed, cfg.threads);
        const std::string path = cfg.output.dir + "/basis_" + mortarms::to_string(type) + ".txt";
        mortarms::write_basis_export(basis, path);
        std::cout << "wrote " << path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mortar multiscale flow experiments"};
    app.require_subcommand(1);

    CommonArgs solve_args, errors_args, precond_args, snapshots_args;
    CLI::App* solve = app.add_subcommand("solve", "one fine-scale solve plus field dumps");
    add_common(solve, solve_args);
    CLI::App* errors = app.add_subcommand("errors", "error-decay study over basis types and sizes");
    add_common(errors, errors_args);
    CLI::App* precond = app.add_subcommand("precond", "preconditioner iteration study");
    add_common(precond, precond_args);
    CLI::App* snapshots = app.add_subcommand("snapshots", "export mortar basis modes");
    add_common(snapshots, snapshots_args);

    CLI11_PARSE(app, argc, argv);
    try {
        if (solve->parsed()) return run_solve(solve_args);
        if (errors->parsed()) return run_errors(errors_args);
        if (precond->parsed()) return run_precond(precond_args);
        if (snapshots->parsed()) return run_snapshots(snapshots_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
