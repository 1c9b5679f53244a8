#include "msfem/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "msfem/fine_mesh.hpp"
#include "msfem/metrics.hpp"
#include "msfem/reference.hpp"

namespace msfem {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, sep)) out.push_back(trim(tok));
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw std::runtime_error(where + ": not a number: '" + s + "'");
    }
}

std::vector<double> parse_list(const std::string& s, const std::string& where) {
    std::vector<double> out;
    for (const std::string& tok : split(s, ','))
        if (!tok.empty()) out.push_back(parse_double(tok, where));
    if (out.empty()) throw std::runtime_error(where + ": empty list");
    return out;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

std::string b_descriptor(Vec2 b) {
    std::ostringstream s;
    s.precision(17);
    s << "b=" << b.x << ',' << b.y;
    return s.str();
}

DomainSpec make_spec(const ExperimentConfig& cfg, double eps) {
    DomainSpec spec;
    spec.epsilon = eps;
    spec.perforation_bc = cfg.problem;
    if (cfg.random_thinning)
        spec.pattern =
            PerforationPattern::random_thinned(cfg.motif(), cfg.keep_probability, cfg.seed);
    else
        spec.pattern = PerforationPattern::periodic(cfg.motif());
    return spec;
}

BasisSet ensure_bases(const CoarseMesh& coarse, const DomainSpec& spec, double alpha, Vec2 bvec,
                      const BasisConfig& bcfg, int m, int workers, const BasisCache& cache) {
    const int nt = static_cast<int>(coarse.triangles.size());
    BasisSet set;
    set.m = m;
    set.meshes.resize(nt);
    set.bases.resize(nt);
    const AdvectionField b =
        (bvec.x == 0.0 && bvec.y == 0.0) ? AdvectionField::zero() : AdvectionField::constant(bvec);
    const std::string bdesc = b_descriptor(bvec);
    parallel_for(nt, workers, [&](int tri) {
        set.meshes[tri] = build_fine_mesh(coarse, tri, spec, m);
        const std::string key =
            basis_cache_key(spec, bcfg, coarse.N, tri, m, alpha, bdesc);
        if (auto cached = cache.load(key)) {
            set.bases[tri] = std::move(*cached);
            return;
        }
        set.bases[tri] = compute_element_basis(coarse, tri, set.meshes[tri], spec, alpha, b, bcfg);
        cache.store(key, set.bases[tri]);
    });
    return set;
}

std::string reference_key(const DomainSpec& spec, double alpha, Vec2 b, const std::string& fname,
                          int n_fine) {
    BasisConfig dummy;
    std::ostringstream key;
    key << "ref|" << basis_cache_key(spec, dummy, n_fine, -1, 0, alpha, b_descriptor(b))
        << "|f=" << fname;
    return key.str();
}

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (c == '(' || c == ')' || c == '/') c = '_';
    return out;
}

}  // namespace

void parallel_for(int n_jobs, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n_jobs));
    if (workers == 1) {
        for (int i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_jobs || failed.load()) return;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!failed.exchange(true)) first_error = e.what();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (failed.load()) throw std::runtime_error("parallel_for: " + first_error);
}

Motif ExperimentConfig::motif() const {
    if (motif_name == "O1") return Motif::o1();
    if (motif_name == "O2") return Motif::o2();
    if (motif_name == "rO1") return Motif::scaled_o1(motif_scale);
    if (motif_name == "none") return Motif::none();
    throw std::runtime_error("unknown motif: " + motif_name);
}

std::function<double(Vec2)> ExperimentConfig::source() const {
    if (f_name == "paper")
        return [](Vec2 p) { return std::sin(kPi / 2.0 * p.x) * std::sin(kPi / 2.0 * p.y); };
    if (f_name == "one") return [](Vec2) { return 1.0; };
    if (f_name == "zero") return [](Vec2) { return 0.0; };
    throw std::runtime_error("unknown source f: " + f_name);
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::string& origin) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "problem") {
            if (value == "dirichlet") cfg.problem = PerforationBC::Dirichlet;
            else if (value == "neumann") cfg.problem = PerforationBC::Neumann;
            else throw std::runtime_error(where + ": problem must be dirichlet|neumann");
        } else if (key == "alpha") {
            cfg.alpha_list = parse_list(value, where);
        } else if (key == "eps") {
            cfg.eps_list = parse_list(value, where);
        } else if (key == "N") {
            cfg.coarse_n_list.clear();
            for (double v : parse_list(value, where))
                cfg.coarse_n_list.push_back(static_cast<int>(v));
        } else if (key == "b") {
            const auto parts = parse_list(value, where);
            if (parts.size() != 2) throw std::runtime_error(where + ": b needs two components");
            cfg.b_dir = {parts[0], parts[1]};
        } else if (key == "b_scale") {
            cfg.b_scale = parse_double(value, where);
        } else if (key == "f") {
            cfg.f_name = value;
        } else if (key == "motif") {
            if (value.rfind("rO1:", 0) == 0) {
                cfg.motif_name = "rO1";
                cfg.motif_scale = parse_double(value.substr(4), where);
            } else {
                cfg.motif_name = value;
            }
        } else if (key == "random_thinning") {
            cfg.random_thinning = value == "true" || value == "1";
        } else if (key == "keep") {
            cfg.keep_probability = parse_double(value, where);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
        } else if (key == "methods") {
            cfg.methods = split(value, ',');
        } else if (key == "n_fine") {
            cfg.n_fine = static_cast<int>(parse_double(value, where));
        } else if (key == "m") {
            cfg.m = static_cast<int>(parse_double(value, where));
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(parse_double(value, where));
        } else if (key == "paper_scale") {
            cfg.paper_scale = value == "true" || value == "1";
        } else if (key == "out") {
            cfg.out_dir = value;
        } else {
            throw std::runtime_error(where + ": unknown key '" + key + "'");
        }
    }
    if (cfg.methods.empty()) throw std::runtime_error(origin + ": methods list is empty");
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    return parse(in, path.filename().string());
}

ErrorReport run_experiment(const ExperimentConfig& cfg, const BasisCache& cache) {
    ErrorReport report;
    const auto f = cfg.source();
    const Vec2 bvec{cfg.b_scale * cfg.b_dir.x, cfg.b_scale * cfg.b_dir.y};
    const double b_max = std::hypot(bvec.x, bvec.y);

    for (double alpha : cfg.alpha_list) {
        for (double eps : cfg.eps_list) {
            const DomainSpec spec = make_spec(cfg, eps);

            // reference, shared by every method at this parameter point
            ReferenceProblem ref_problem;
            ref_problem.spec = spec;
            ref_problem.alpha = alpha;
            ref_problem.b = (b_max == 0.0) ? AdvectionField::zero()
                                           : AdvectionField::constant(bvec);
            ref_problem.b_max = b_max;
            ref_problem.f = f;
            const int n_fine =
                cfg.n_fine > 0 ? cfg.n_fine : default_n_fine(ref_problem, cfg.paper_scale);

            ReferenceSolution ref;
            std::string ref_error;
            try {
                const std::string key = reference_key(spec, alpha, bvec, cfg.f_name, n_fine);
                if (auto cached = cache.load_field(key)) {
                    ref.mesh = build_global_fine_mesh(n_fine, spec);
                    if (static_cast<int>(cached->size()) == ref.mesh.node_count())
                        ref.u = std::move(*cached);
                }
                if (ref.u.empty()) {
                    ref = solve_reference(ref_problem, n_fine);
                    cache.store_field(reference_key(spec, alpha, bvec, cfg.f_name, n_fine),
                                      ref.u);
                }
            } catch (const std::exception& e) {
                ref_error = e.what();
            }

            const LayerInfo layer = layer_region(b_max, alpha);

            for (int N : cfg.coarse_n_list) {
                const CoarseMesh coarse = build_coarse_mesh(N);
                const int m = cfg.m > 0 ? cfg.m : default_refinement_level(coarse.H(), eps);
                for (const std::string& name : cfg.methods) {
                    ReportRow row;
                    row.method = name;
                    row.H = coarse.H();
                    row.alpha = alpha;
                    row.eps = eps;
                    row.motif = cfg.motif_name;
                    row.n_fine = n_fine;
                    if (!ref_error.empty()) {
                        row.failed = true;
                        row.error = ref_error;
                        report.rows.push_back(row);
                        continue;
                    }
                    try {
                        const MethodSpec method = MethodSpec::from_name(name, cfg.problem);
                        const std::uint64_t h0 = cache.hits(), m0 = cache.misses();
                        const auto t0 = std::chrono::steady_clock::now();
                        const BasisSet bases = ensure_bases(coarse, spec, alpha, bvec,
                                                            method.basis, m, cfg.workers, cache);
                        const auto t1 = std::chrono::steady_clock::now();
                        const std::uint64_t dh = cache.hits() - h0;
                        const std::uint64_t dm = cache.misses() - m0;
                        row.cache_hit_rate =
                            (dh + dm) ? static_cast<double>(dh) / (dh + dm) : 0.0;

                        CoarseProblem problem;
                        problem.spec = spec;
                        problem.alpha = alpha;
                        problem.b = ref_problem.b;
                        problem.f = f;
                        const CoarseSolution sol = solve_msfem(coarse, problem, bases, method);
                        const auto t2 = std::chrono::steady_clock::now();
                        row.n_dofs = sol.n_dofs;
                        row.t_basis = std::chrono::duration<double>(t1 - t0).count();
                        row.t_solve = std::chrono::duration<double>(t2 - t1).count();

                        const std::vector<double> u_h =
                            transfer_to_reference(coarse, bases, sol, ref.mesh);
                        row.e_whole =
                            relative_error(ref.mesh, u_h, ref.u, Region::whole()).value;
                        row.e_in = relative_error(ref.mesh, u_h, ref.u, layer.inside()).value;
                        row.e_out = relative_error(ref.mesh, u_h, ref.u, layer.outside()).value;
                    } catch (const std::exception& e) {
                        row.failed = true;
                        row.error = e.what();
                    }
                    report.rows.push_back(row);
                }
            }
        }
    }
    return report;
}

PrecomputeSummary precompute_bases(const ExperimentConfig& cfg, const BasisCache& cache) {
    PrecomputeSummary summary;
    const std::uint64_t h0 = cache.hits(), m0 = cache.misses();
    const Vec2 bvec{cfg.b_scale * cfg.b_dir.x, cfg.b_scale * cfg.b_dir.y};
    for (double alpha : cfg.alpha_list) {
        for (double eps : cfg.eps_list) {
            const DomainSpec spec = make_spec(cfg, eps);
            for (int N : cfg.coarse_n_list) {
                const CoarseMesh coarse = build_coarse_mesh(N);
                const int m = cfg.m > 0 ? cfg.m : default_refinement_level(coarse.H(), eps);
                for (const std::string& name : cfg.methods) {
                    const MethodSpec method = MethodSpec::from_name(name, cfg.problem);
                    ensure_bases(coarse, spec, alpha, bvec, method.basis, m, cfg.workers, cache);
                    summary.jobs += static_cast<int>(coarse.triangles.size());
                }
            }
        }
    }
    summary.hits = cache.hits() - h0;
    summary.misses = cache.misses() - m0;
    return summary;
}

void emit_tsv(const ErrorReport& report, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << "method\tH\talpha\teps\tmotif\te_whole\te_in\te_out\tn_dofs\tn_fine\tstatus\n";
    for (const ReportRow& r : report.rows) {
        out << r.method << '\t' << fmt(r.H) << '\t' << fmt(r.alpha) << '\t' << fmt(r.eps) << '\t'
            << r.motif << '\t' << fmt(r.e_whole) << '\t' << fmt(r.e_in) << '\t' << fmt(r.e_out)
            << '\t' << r.n_dofs << '\t' << r.n_fine << '\t'
            << (r.failed ? "failed:" + r.error : "ok") << '\n';
    }
}

void emit_timings_tsv(const ErrorReport& report, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << "method\tH\talpha\teps\tcache_hit_rate\tt_basis_s\tt_solve_s\n";
    for (const ReportRow& r : report.rows)
        out << r.method << '\t' << fmt(r.H) << '\t' << fmt(r.alpha) << '\t' << fmt(r.eps) << '\t'
            << fmt(r.cache_hit_rate) << '\t' << fmt(r.t_basis) << '\t' << fmt(r.t_solve) << '\n';
}

void emit_plotdata(const ErrorReport& report, const std::filesystem::path& dir,
                   const std::string& axis, const std::string& column) {
    std::filesystem::create_directories(dir);
    auto x_of = [&](const ReportRow& r) {
        if (axis == "H") return r.H;
        if (axis == "alpha") return r.alpha;
        if (axis == "eps") return r.eps;
        throw std::runtime_error("emit_plotdata: unknown axis " + axis);
    };
    auto y_of = [&](const ReportRow& r) {
        if (column == "whole") return r.e_whole;
        if (column == "in") return r.e_in;
        if (column == "out") return r.e_out;
        throw std::runtime_error("emit_plotdata: unknown column " + column);
    };
    std::vector<std::string> methods;
    for (const ReportRow& r : report.rows)
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
    for (const std::string& method : methods) {
        std::ofstream out(dir / (sanitize(method) + ".dat"), std::ios::trunc);
        out << "# " << axis << "\terror_" << column << "\n";
        for (const ReportRow& r : report.rows)
            if (r.method == method && !r.failed)
                out << fmt(x_of(r)) << '\t' << fmt(y_of(r)) << '\n';
    }
}

}  // namespace msfem
