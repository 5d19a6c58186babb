#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mortarms/field.hpp"
#include "mortarms/geometry.hpp"
#include "mortarms/interface.hpp"
#include "mortarms/mortar_basis.hpp"
#include "mortarms/solvers.hpp"

namespace mortarms {

// Declarative experiment runner.  A JSON config names the geometry, the
// coefficient field, and one or both study blocks; runs are deterministic
// for a fixed (config, seed) pair regardless of thread count, and the
// emitted CSVs are byte-identical across reruns.

std::string to_string(MortarBasisType type);
MortarBasisType basis_type_from_string(const std::string& s);
std::string to_string(Composition comp);
Composition composition_from_string(const std::string& s);

struct ErrorStudyConfig {
    std::vector<MortarBasisType> types;
    int nb_min = 1;
    int nb_max = 5;
};

struct PrecondStudyConfig {
    std::vector<MortarBasisType> coarse_types;
    int nb = 2;
    std::vector<int> domains = {1};  // oversample presets for the local component
    std::vector<Composition> compositions = {Composition::additive};
    std::string solver = "pcg";  // "pcg" or "gmres"
    int restart = 2;
    double tol = 1e-7;
    int maxit = 500;
};

struct OutputConfig {
    std::string dir = ".";
    bool fields = false;  // also dump pressure/flux grids of a fine solve
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    int threads = 1;
    int N = 2;
    int n = 2;

    // Exactly one of: a named builtin layout (scalable by `contrasts`), a
    // raster file, or inline features.
    std::string field_builtin;
    double field_contrast = 1.0;
    std::string field_raster;
    bool field_inline = false;
    FieldSpec inline_spec;

    double source_value = 1.0;  // constant source density

    // Study-level contrast sweep; requires a builtin field.  Empty means one
    // pass at the field's own contrast (recorded as 0 for raster/inline
    // fields, whose contrast is not a single number).
    std::vector<double> contrasts;

    ErrorStudyConfig error_study;
    PrecondStudyConfig precond_study;
    OutputConfig output;

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);

    // Sorted `dotted.key=value` lines followed by one `config_hash` line
    // (FNV-1a 64 of the preceding lines).
    std::string canonical_echo() const;
    std::uint64_t hash() const;

    GridGeometry make_geometry() const;
    std::vector<double> effective_contrasts() const;
    PermeabilityField realize(const GridGeometry& geom, double contrast) const;
    SourceField make_source(const GridGeometry& geom) const;
};

struct ErrorRow {
    std::string case_name;
    int Nb = 0;
    double e_u = 0.0;
    double e_q = 0.0;
};

struct IterRow {
    double contrast = 0.0;
    std::string preconditioner;  // "<coarse>-nb<k>-<composition>-<solver>"
    int domain = 0;
    int iterations = 0;
    bool converged = false;
};

struct RunReport {
    std::string echo;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<ErrorRow> error_rows;
    std::vector<IterRow> iter_rows;
};

// Per (contrast, basis type, Nb): build the mortar basis at nb_max, solve
// the Galerkin interface system directly at each truncation (the bases are
// nested, so each Nb is a structured submatrix of the nb_max system),
// recover, and compare against the monolithic fine solution.  Rows are
// ordered contrast-major, then config order of types, then ascending Nb.
RunReport run_error_study(const ExperimentConfig& cfg);

// Per (contrast, coarse type, domain, composition): run the configured
// Krylov method on the fine interface system.  Throws when PCG is combined
// with a restrictive (padded-domain) local component.
RunReport run_precond_study(const ExperimentConfig& cfg);

// errors.csv, iterations.csv (headers always present), config.echo.
void emit_outputs(const RunReport& report, const std::string& dir);

// u_field.txt: raster-format cell pressures.  flux_field.txt: two labeled
// blocks of normal fluxes in +x/+y orientation, horizontal edges as Nf+1
// rows of Nf values (bottom to top), vertical edges as Nf rows of Nf+1
// values.
void write_field_dumps(const GridGeometry& geom, const GlobalSolution& sol, const std::string& dir);

// Per edge: a header line `edge <id> rows <n> cols <Nb>` and the mode matrix.
void write_basis_export(const MortarBasis& basis, const std::string& path);

std::string format_sig6(double x);  // %.6g, shared by all CSV writers

}  // namespace mortarms
