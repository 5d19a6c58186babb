#include "mortarms/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "mortarms/local_mixed.hpp"

namespace mortarms {

using nlohmann::json;

std::string to_string(MortarBasisType type) {
    switch (type) {
        case MortarBasisType::polynomial: return "polynomial";
        case MortarBasisType::case1: return "case1";
        case MortarBasisType::case2: return "case2";
        case MortarBasisType::case3: return "case3";
        case MortarBasisType::case4: return "case4";
    }
    throw std::logic_error("unknown basis type");
}

MortarBasisType basis_type_from_string(const std::string& s) {
    if (s == "polynomial") return MortarBasisType::polynomial;
    if (s == "case1") return MortarBasisType::case1;
    if (s == "case2") return MortarBasisType::case2;
    if (s == "case3") return MortarBasisType::case3;
    if (s == "case4") return MortarBasisType::case4;
    throw std::invalid_argument("unknown basis type '" + s + "' (expected polynomial or case1..case4)");
}

std::string to_string(Composition comp) {
    switch (comp) {
        case Composition::additive: return "additive";
        case Composition::hybrid: return "hybrid";
        case Composition::hybrid_literal: return "hybrid_literal";
    }
    throw std::logic_error("unknown composition");
}

Composition composition_from_string(const std::string& s) {
    if (s == "additive") return Composition::additive;
    if (s == "hybrid") return Composition::hybrid;
    if (s == "hybrid_literal") return Composition::hybrid_literal;
    throw std::invalid_argument("unknown composition '" + s + "' (expected additive, hybrid, or hybrid_literal)");
}

std::string format_sig6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
    }
}

void parse_features(const json& arr, FieldSpec& spec) {
    if (!arr.is_array()) throw std::invalid_argument("config: field.features must be an array");
    for (const auto& f : arr) {
        if (f.contains("rect")) {
            check_keys(f, "field.features[].", {"rect", "eta"});
            const auto& r = f.at("rect");
            if (!r.is_array() || r.size() != 4) {
                throw std::invalid_argument("config: feature rect must be [x0, y0, x1, y1]");
            }
            spec.features.push_back(RectFeature{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                                                r[3].get<double>(), f.at("eta").get<double>()});
        } else if (f.contains("channel")) {
            check_keys(f, "field.features[].", {"channel", "width", "eta"});
            ChannelFeature ch;
            for (const auto& p : f.at("channel")) {
                if (!p.is_array() || p.size() != 2) throw std::invalid_argument("config: channel points must be [x, y]");
                ch.points.push_back({p[0].get<double>(), p[1].get<double>()});
            }
            ch.width = f.at("width").get<double>();
            ch.eta = f.at("eta").get<double>();
            spec.features.push_back(std::move(ch));
        } else {
            throw std::invalid_argument("config: each feature needs a 'rect' or 'channel' key");
        }
    }
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string dump_scalar(double x) { return json(x).dump(); }

RunReport init_report(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.echo = cfg.canonical_echo();
    rep.config_hash = cfg.hash();
    rep.seed = cfg.seed;
    return rep;
}

void open_or_throw(std::ofstream& out, const std::string& path) {
    out.open(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace

static ExperimentConfig parse_config(const json& j);

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    try {
        return parse_config(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

static ExperimentConfig parse_config(const json& j) {
    check_keys(j, "", {"seed", "threads", "geometry", "field", "source", "contrasts", "error_study", "precond_study",
                       "output"});
    ExperimentConfig cfg;
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (cfg.threads < 1) throw std::invalid_argument("config: threads must be at least 1");

    if (j.contains("geometry")) {
        const auto& g = j.at("geometry");
        check_keys(g, "geometry.", {"N", "n"});
        cfg.N = g.at("N").get<int>();
        cfg.n = g.at("n").get<int>();
    }

    if (j.contains("field")) {
        const auto& f = j.at("field");
        check_keys(f, "field.", {"builtin", "contrast", "raster", "background", "features"});
        const bool has_builtin = f.contains("builtin");
        const bool has_raster = f.contains("raster");
        const bool has_inline = f.contains("background") || f.contains("features");
        if (has_builtin + has_raster + has_inline != 1) {
            throw std::invalid_argument("config: field needs exactly one of builtin, raster, or background/features");
        }
        if (has_builtin) {
            cfg.field_builtin = f.at("builtin").get<std::string>();
            if (f.contains("contrast")) cfg.field_contrast = f.at("contrast").get<double>();
        } else if (has_raster) {
            cfg.field_raster = f.at("raster").get<std::string>();
            if (f.contains("contrast")) throw std::invalid_argument("config: contrast applies to builtin fields only");
        } else {
            cfg.field_inline = true;
            if (f.contains("background")) cfg.inline_spec.background = f.at("background").get<double>();
            if (f.contains("features")) parse_features(f.at("features"), cfg.inline_spec);
            if (f.contains("contrast")) throw std::invalid_argument("config: contrast applies to builtin fields only");
        }
    } else {
        cfg.field_inline = true;  // homogeneous unit coefficient
    }

    if (j.contains("source")) {
        const auto& s = j.at("source");
        check_keys(s, "source.", {"value"});
        if (s.contains("value")) cfg.source_value = s.at("value").get<double>();
    }

    if (j.contains("contrasts")) {
        for (const auto& c : j.at("contrasts")) cfg.contrasts.push_back(c.get<double>());
        if (!cfg.contrasts.empty() && cfg.field_builtin.empty()) {
            throw std::invalid_argument("config: a contrast sweep requires a builtin field");
        }
        for (double c : cfg.contrasts) {
            if (!(c > 0.0)) throw std::invalid_argument("config: contrasts must be positive");
        }
    }

    if (j.contains("error_study")) {
        const auto& e = j.at("error_study");
        check_keys(e, "error_study.", {"types", "nb_min", "nb_max"});
        for (const auto& t : e.at("types")) cfg.error_study.types.push_back(basis_type_from_string(t.get<std::string>()));
        if (e.contains("nb_min")) cfg.error_study.nb_min = e.at("nb_min").get<int>();
        if (e.contains("nb_max")) cfg.error_study.nb_max = e.at("nb_max").get<int>();
        if (cfg.error_study.nb_min < 1 || cfg.error_study.nb_max < cfg.error_study.nb_min) {
            throw std::invalid_argument("config: need 1 <= nb_min <= nb_max");
        }
    }

    if (j.contains("precond_study")) {
        const auto& p = j.at("precond_study");
        check_keys(p, "precond_study.",
                   {"coarse", "nb", "domains", "compositions", "solver", "restart", "tol", "maxit"});
        for (const auto& t : p.at("coarse")) {
            cfg.precond_study.coarse_types.push_back(basis_type_from_string(t.get<std::string>()));
        }
        if (p.contains("nb")) cfg.precond_study.nb = p.at("nb").get<int>();
        if (cfg.precond_study.nb < 1) throw std::invalid_argument("config: precond_study.nb must be at least 1");
        if (p.contains("domains")) {
            cfg.precond_study.domains.clear();
            for (const auto& d : p.at("domains")) {
                const int dv = d.get<int>();
                if (dv < 1 || dv > 4) throw std::invalid_argument("config: domains must lie in 1..4");
                cfg.precond_study.domains.push_back(dv);
            }
        }
        if (p.contains("compositions")) {
            cfg.precond_study.compositions.clear();
            for (const auto& c : p.at("compositions")) {
                cfg.precond_study.compositions.push_back(composition_from_string(c.get<std::string>()));
            }
        }
        if (p.contains("solver")) cfg.precond_study.solver = p.at("solver").get<std::string>();
        if (cfg.precond_study.solver != "pcg" && cfg.precond_study.solver != "gmres") {
            throw std::invalid_argument("config: solver must be pcg or gmres");
        }
        if (p.contains("restart")) cfg.precond_study.restart = p.at("restart").get<int>();
        if (p.contains("tol")) cfg.precond_study.tol = p.at("tol").get<double>();
        if (p.contains("maxit")) cfg.precond_study.maxit = p.at("maxit").get<int>();
        if (cfg.precond_study.restart < 1 || cfg.precond_study.maxit < 1 || !(cfg.precond_study.tol > 0.0)) {
            throw std::invalid_argument("config: restart and maxit must be positive, tol > 0");
        }
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        check_keys(o, "output.", {"dir", "fields"});
        if (o.contains("dir")) cfg.output.dir = o.at("dir").get<std::string>();
        if (o.contains("fields")) cfg.output.fields = o.at("fields").get<bool>();
    }
    return cfg;
}

std::string ExperimentConfig::canonical_echo() const {
    std::vector<std::pair<std::string, std::string>> kv;
    const auto add = [&kv](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
    add("seed", std::to_string(seed));
    add("threads", std::to_string(threads));
    add("geometry.N", std::to_string(N));
    add("geometry.n", std::to_string(n));
    if (!field_builtin.empty()) {
        add("field.builtin", field_builtin);
        add("field.contrast", dump_scalar(field_contrast));
    } else if (!field_raster.empty()) {
        add("field.raster", field_raster);
    } else {
        add("field.background", dump_scalar(inline_spec.background));
        for (std::size_t i = 0; i < inline_spec.features.size(); ++i) {
            const std::string base = "field.features." + std::to_string(i) + ".";
            if (const auto* r = std::get_if<RectFeature>(&inline_spec.features[i])) {
                add(base + "rect", dump_scalar(r->x0) + "," + dump_scalar(r->y0) + "," + dump_scalar(r->x1) + "," +
                                       dump_scalar(r->y1));
                add(base + "eta", dump_scalar(r->eta));
            } else if (const auto* c = std::get_if<ChannelFeature>(&inline_spec.features[i])) {
                std::string pts;
                for (const auto& p : c->points) {
                    if (!pts.empty()) pts += ";";
                    pts += dump_scalar(p[0]) + "," + dump_scalar(p[1]);
                }
                add(base + "channel", pts);
                add(base + "width", dump_scalar(c->width));
                add(base + "eta", dump_scalar(c->eta));
            }
        }
    }
    add("source.value", dump_scalar(source_value));
    for (std::size_t i = 0; i < contrasts.size(); ++i) {
        add("contrasts." + std::to_string(i), dump_scalar(contrasts[i]));
    }
    for (std::size_t i = 0; i < error_study.types.size(); ++i) {
        add("error_study.types." + std::to_string(i), to_string(error_study.types[i]));
    }
    if (!error_study.types.empty()) {
        add("error_study.nb_min", std::to_string(error_study.nb_min));
        add("error_study.nb_max", std::to_string(error_study.nb_max));
    }
    if (!precond_study.coarse_types.empty()) {
        for (std::size_t i = 0; i < precond_study.coarse_types.size(); ++i) {
            add("precond_study.coarse." + std::to_string(i), to_string(precond_study.coarse_types[i]));
        }
        add("precond_study.nb", std::to_string(precond_study.nb));
        for (std::size_t i = 0; i < precond_study.domains.size(); ++i) {
            add("precond_study.domains." + std::to_string(i), std::to_string(precond_study.domains[i]));
        }
        for (std::size_t i = 0; i < precond_study.compositions.size(); ++i) {
            add("precond_study.compositions." + std::to_string(i), to_string(precond_study.compositions[i]));
        }
        add("precond_study.solver", precond_study.solver);
        add("precond_study.restart", std::to_string(precond_study.restart));
        add("precond_study.tol", dump_scalar(precond_study.tol));
        add("precond_study.maxit", std::to_string(precond_study.maxit));
    }
    add("output.dir", output.dir);
    add("output.fields", output.fields ? "true" : "false");
    std::sort(kv.begin(), kv.end());
    std::string body;
    for (const auto& [k, v] : kv) body += k + "=" + v + "\n";
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
    return body + "config_hash=" + hex + "\n";
}

std::uint64_t ExperimentConfig::hash() const {
    const std::string echo = canonical_echo();
    const std::size_t cut = echo.rfind("config_hash=");
    return fnv1a64(echo.substr(0, cut));
}

GridGeometry ExperimentConfig::make_geometry() const { return build_geometry(N, n); }

std::vector<double> ExperimentConfig::effective_contrasts() const {
    if (!contrasts.empty()) return contrasts;
    if (!field_builtin.empty()) return {field_contrast};
    return {0.0};  // raster/inline field taken as-is
}

PermeabilityField ExperimentConfig::realize(const GridGeometry& geom, double contrast) const {
    if (!field_builtin.empty()) {
        const double eta = contrasts.empty() ? field_contrast : contrast;
        return realize_field(FieldSpec::builtin(field_builtin, eta), geom);
    }
    if (!field_raster.empty()) {
        FieldSpec spec;
        spec.raster = field_raster;
        return realize_field(spec, geom);
    }
    return realize_field(inline_spec, geom);
}

SourceField ExperimentConfig::make_source(const GridGeometry& geom) const {
    return realize_source_constant(source_value, geom);
}

RunReport run_error_study(const ExperimentConfig& cfg) {
    RunReport rep = init_report(cfg);
    if (cfg.error_study.types.empty()) return rep;
    if (cfg.error_study.nb_min < 1 || cfg.error_study.nb_max < cfg.error_study.nb_min) {
        throw std::invalid_argument("error study needs 1 <= nb_min <= nb_max");
    }
    const GridGeometry geom = cfg.make_geometry();
    const SourceField f = cfg.make_source(geom);
    const int ne = geom.num_coarse_edges();
    const int nbmax = cfg.error_study.nb_max;
    for (const double eta : cfg.effective_contrasts()) {
        const PermeabilityField kappa = cfg.realize(geom, eta);
        const InterfaceOperator op(geom, kappa, cfg.threads);
        const GlobalSolution fine = monolithic_fine_solve(geom, kappa, f);
        const Eigen::VectorXd g = op.rhs(f);
        for (const MortarBasisType type : cfg.error_study.types) {
            const MortarBasis basis = build_basis_for_type(geom, kappa, type, nbmax, cfg.seed, cfg.threads);
            const Eigen::MatrixXd rmax = basis.prolongation_matrix();
            const Eigen::MatrixXd a0max = assemble_coarse_matrix(op, rmax);
            const Eigen::VectorXd g0max = rmax.transpose() * g;
            for (int nb = cfg.error_study.nb_min; nb <= nbmax; ++nb) {
                // Nested bases: the Nb-mode system is the submatrix of the
                // nb_max system at the first nb modes of every edge.
                std::vector<int> sel;
                sel.reserve(static_cast<std::size_t>(ne) * nb);
                for (int e = 0; e < ne; ++e) {
                    for (int k = 0; k < nb; ++k) sel.push_back(e * nbmax + k);
                }
                const Eigen::Index m = static_cast<Eigen::Index>(sel.size());
                Eigen::MatrixXd a0(m, m);
                Eigen::VectorXd g0(m);
                for (Eigen::Index i = 0; i < m; ++i) {
                    g0[i] = g0max[sel[static_cast<std::size_t>(i)]];
                    for (Eigen::Index k = 0; k < m; ++k) {
                        a0(i, k) = a0max(sel[static_cast<std::size_t>(i)], sel[static_cast<std::size_t>(k)]);
                    }
                }
                const Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * (a0 + a0.transpose().eval()));
                if (ldlt.info() != Eigen::Success) {
                    throw std::runtime_error("coarse interface matrix factorization failed at " + to_string(type) +
                                             " Nb=" + std::to_string(nb));
                }
                const Eigen::VectorXd xc = ldlt.solve(g0);
                Eigen::VectorXd xi = Eigen::VectorXd::Zero(op.dim());
                for (Eigen::Index i = 0; i < m; ++i) xi += rmax.col(sel[static_cast<std::size_t>(i)]) * xc[i];
                const GlobalSolution sol = op.recover(xi, f);
                const ErrorReport err = error_metrics(geom, kappa, sol, fine);
                rep.error_rows.push_back(ErrorRow{to_string(type), nb, err.e_u, err.e_q});
            }
        }
    }
    return rep;
}

RunReport run_precond_study(const ExperimentConfig& cfg) {
    RunReport rep = init_report(cfg);
    const PrecondStudyConfig& pc = cfg.precond_study;
    if (pc.coarse_types.empty() || pc.domains.empty() || pc.compositions.empty()) return rep;
    if (pc.solver != "pcg" && pc.solver != "gmres") throw std::invalid_argument("solver must be pcg or gmres");
    const GridGeometry geom = cfg.make_geometry();
    const SourceField f = cfg.make_source(geom);
    for (const double eta : cfg.effective_contrasts()) {
        const PermeabilityField kappa = cfg.realize(geom, eta);
        const InterfaceOperator op(geom, kappa, cfg.threads);
        const Eigen::VectorXd b = op.rhs(f);
        std::map<int, std::unique_ptr<LocalPreconditioner>> locals;
        for (const int d : pc.domains) {
            if (!locals.count(d)) {
                locals[d] = std::make_unique<LocalPreconditioner>(op, OversampleSpec::domain(d, geom.n), cfg.threads);
            }
        }
        for (const MortarBasisType type : pc.coarse_types) {
            const MortarBasis basis = build_basis_for_type(geom, kappa, type, pc.nb, cfg.seed, cfg.threads);
            const CoarsePreconditioner cp(op, basis.prolongation_matrix());
            for (const int d : pc.domains) {
                const LocalPreconditioner& lp = *locals.at(d);
                for (const Composition comp : pc.compositions) {
                    const TwoLevelPreconditioner tlp(op, cp, lp, comp);
                    if (pc.solver == "pcg" && !tlp.symmetric()) {
                        throw std::invalid_argument(
                            "PCG requires a symmetric preconditioner, but domain " + std::to_string(d) +
                            " pads the local blocks (restrictive mode); switch the solver to gmres");
                    }
                    const ApplyFn apply_a = [&op](const Eigen::VectorXd& v) { return op.apply(v); };
                    const ApplyFn apply_m = [&tlp](const Eigen::VectorXd& v) { return tlp.apply(v); };
                    const auto result = pc.solver == "pcg"
                                            ? pcg(apply_a, apply_m, b, pc.tol, pc.maxit)
                                            : gmres_restarted(apply_a, apply_m, b, pc.restart, pc.tol, pc.maxit);
                    IterRow row;
                    row.contrast = eta;
                    row.preconditioner =
                        to_string(type) + "-nb" + std::to_string(pc.nb) + "-" + to_string(comp) + "-" + pc.solver;
                    row.domain = d;
                    row.iterations = result.second.iterations;
                    row.converged = result.second.converged;
                    rep.iter_rows.push_back(std::move(row));
                }
            }
        }
    }
    return rep;
}

void emit_outputs(const RunReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out;
        open_or_throw(out, dir + "/errors.csv");
        out << "case,Nb,e_u,e_q\n";
        for (const ErrorRow& r : report.error_rows) {
            out << r.case_name << "," << r.Nb << "," << format_sig6(r.e_u) << "," << format_sig6(r.e_q) << "\n";
        }
    }
    {
        std::ofstream out;
        open_or_throw(out, dir + "/iterations.csv");
        out << "contrast,preconditioner,domain,iterations,converged\n";
        for (const IterRow& r : report.iter_rows) {
            out << format_sig6(r.contrast) << "," << r.preconditioner << "," << r.domain << "," << r.iterations << ","
                << (r.converged ? 1 : 0) << "\n";
        }
    }
    {
        std::ofstream out;
        open_or_throw(out, dir + "/config.echo");
        out << report.echo;
    }
}

void write_field_dumps(const GridGeometry& geom, const GlobalSolution& sol, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_raster(dir + "/u_field.txt", geom, sol.pressure);
    std::ofstream out;
    open_or_throw(out, dir + "/flux_field.txt");
    const int nf = geom.Nf;
    // Normal fluxes oriented along +x/+y; interior values are read from the
    // lower/left cell, whose outward normal already points that way.
    out << "horizontal " << (nf + 1) << " " << nf << "\n";
    for (int iy = 0; iy <= nf; ++iy) {
        for (int ix = 0; ix < nf; ++ix) {
            const double v = iy > 0 ? sol.flux(geom.cell_index(ix, iy - 1), 3) : -sol.flux(geom.cell_index(ix, 0), 2);
            out << format_sig6(v) << (ix + 1 < nf ? " " : "\n");
        }
    }
    out << "vertical " << nf << " " << (nf + 1) << "\n";
    for (int iy = 0; iy < nf; ++iy) {
        for (int ix = 0; ix <= nf; ++ix) {
            const double v = ix > 0 ? sol.flux(geom.cell_index(ix - 1, iy), 1) : -sol.flux(geom.cell_index(0, iy), 0);
            out << format_sig6(v) << (ix < nf ? " " : "\n");
        }
    }
}

void write_basis_export(const MortarBasis& basis, const std::string& path) {
    std::ofstream out;
    open_or_throw(out, path);
    const GridGeometry& geom = basis.geometry();
    for (int e = 0; e < geom.num_coarse_edges(); ++e) {
        const Eigen::MatrixXd& m = basis.edge_modes(e);
        out << "edge " << e << " rows " << m.rows() << " cols " << m.cols() << "\n";
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index k = 0; k < m.cols(); ++k) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.12g", m(i, k));
                out << buf << (k + 1 < m.cols() ? " " : "\n");
            }
        }
    }
}

}  // namespace mortarms
