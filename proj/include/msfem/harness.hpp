#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <vector>

#include "msfem/basis_cache.hpp"
#include "msfem/coarse_problem.hpp"
#include "msfem/geometry.hpp"

namespace msfem {

/// Runs fn(0..n_jobs-1) on a bounded pool. Results must be written to
/// per-index slots by the caller; the schedule is work-stealing but the
/// output layout is index-ordered, so results are deterministic.
void parallel_for(int n_jobs, int workers, const std::function<void(int)>& fn);

/// Flat key = value configuration (see README for the grammar). Lists are
/// comma-separated. Unknown keys are an error with a line diagnostic.
struct ExperimentConfig {
    PerforationBC problem = PerforationBC::Dirichlet;

    std::vector<double> alpha_list{1.0};
    std::vector<double> eps_list{0.03};
    std::vector<int> coarse_n_list{8};  // H = 1/N

    Vec2 b_dir{1.0, 1.0};   // b-hat = b_scale * b_dir, constant
    double b_scale = 1.0;

    std::string f_name = "paper";  // paper | one | zero

    std::string motif_name = "O1";  // O1 | O2 | rO1:<scale> | none
    double motif_scale = 0.5;       // rO1 only
    bool random_thinning = false;
    double keep_probability = 1.0;
    std::uint64_t seed = 0;

    std::vector<std::string> methods{"MsFEM"};

    int n_fine = 0;  // 0 = auto (Peclet + epsilon resolution)
    int m = 0;       // 0 = auto per H
    int workers = 1;
    bool paper_scale = false;
    std::string out_dir = ".";

    Motif motif() const;
    std::function<double(Vec2)> source() const;

    static ExperimentConfig parse(std::istream& in, const std::string& origin);
    static ExperimentConfig parse_file(const std::filesystem::path& path);
};

struct ReportRow {
    std::string method;
    double H = 0.0, alpha = 0.0, eps = 0.0;
    std::string motif;
    double e_whole = 0.0, e_in = 0.0, e_out = 0.0;
    int n_dofs = 0;
    int n_fine = 0;
    double cache_hit_rate = 0.0;
    double t_basis = 0.0, t_solve = 0.0;  // seconds; kept out of report.tsv
    bool failed = false;
    std::string error;
};

struct ErrorReport {
    std::vector<ReportRow> rows;
    bool all_succeeded() const {
        for (const ReportRow& r : rows)
            if (r.failed) return false;
        return true;
    }
};

/// Per parameter point: reference (cached), bases (parallel, cached), one
/// solve per method, error metrics. Row failures are isolated.
ErrorReport run_experiment(const ExperimentConfig& cfg, const BasisCache& cache);

struct PrecomputeSummary {
    int jobs = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
};

PrecomputeSummary precompute_bases(const ExperimentConfig& cfg, const BasisCache& cache);

/// Deterministic columns only; timings go to a sibling timings.tsv.
void emit_tsv(const ErrorReport& report, const std::filesystem::path& path);
void emit_timings_tsv(const ErrorReport& report, const std::filesystem::path& path);

/// One (x, y) file per method: <dir>/<method>.dat, x = the swept axis
/// ("H", "alpha" or "eps"), y = the chosen error column ("whole"|"in"|"out").
void emit_plotdata(const ErrorReport& report, const std::filesystem::path& dir,
                   const std::string& axis, const std::string& column);

}  // namespace msfem
