#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ringlab/config.hpp"
#include "ringlab/errors.hpp"
#include "ringlab/integrator.hpp"
#include "ringlab/io.hpp"
#include "ringlab/kernels.hpp"
#include "ringlab/oracle.hpp"
#include "ringlab/velocity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ringlab;

namespace {

enum Exit : int { ok = 0, config_error = 2, assumption_failure = 3, runtime_failure = 4 };

/// Thrown by a subcommand to leave with a given exit code after printing.
struct ExitRequest {
    int code;
};

struct Overrides {
    std::string config;
    std::string out;
    std::optional<int> workers;
    std::optional<double> theta;
    std::optional<double> delta_over_h;
};

void add_common(CLI::App* sub, Overrides& o, bool need_config) {
    auto* c = sub->add_option("--config", o.config, "JSON config document");
    if (need_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides the config)");
    sub->add_option("--workers", o.workers, "worker threads (falls back to RINGLAB_WORKERS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--theta", o.theta, "use the treecode path with this opening angle");
    sub->add_option("--delta-over-h", o.delta_over_h, "blob length in units of the seeding spacing");
}

int env_workers() {
    const char* v = std::getenv("RINGLAB_WORKERS");
    if (!v || !*v) return 0;
    try {
        const int n = std::stoi(v);
        if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("RINGLAB_WORKERS: expected a positive integer, got '") + v + "'");
}

// Overrides that change the physics are patched into the merged document so
// that they enter the digest.
SimConfig load_with_overrides(const Overrides& o) {
    SimConfig sim = load_config(o.config);
    if (o.theta || o.delta_over_h) {
        json j = json::parse(sim.canonical_json);
        if (o.theta) {
            j["velocity"]["path"] = "treecode";
            j["velocity"]["theta"] = *o.theta;
        }
        if (o.delta_over_h) {
            j["kernel"]["delta_over_h"] = *o.delta_over_h;
            j["kernel"]["delta"] = nullptr;
        }
        sim = parse_config(j.dump(2));
    }
    if (!o.out.empty()) sim.output = o.out;
    if (o.workers)
        sim.workers = *o.workers;
    else if (const int w = env_workers(); w > 0)
        sim.workers = w;
    return sim;
}

std::string report_text(const SimConfig& sim, const InitialData& d) {
    const AssumptionReport& r = d.report;
    std::ostringstream os;
    auto line = [&](const char* name, bool pass, const std::string& detail) {
        os << "  " << (pass ? "PASS" : "FAIL") << "  " << name << "  " << detail << "\n";
    };
    os << "ringlab assumption report\n";
    os << "version: " << version_string() << "\n";
    os << "digest:  " << sim.digest << "\n";
    os << "scenario: " << to_string(sim.scenario) << "  particles: " << d.cloud.size()
       << "  epsilon: " << format_double(d.cloud.epsilon) << "\n";
    const auto& k = sim.data.constants;
    line("(i)   vorticity bound", r.pass[0],
         "max xi / eps^-2 = " + format_double(r.max_xi_over_eps2) + " (c1 = " + format_double(k.c1) + ")");
    line("(ii)  circulation", r.pass[1], "|M0 - mu| = " + format_double(r.m0_gap));
    line("(iii) radial moment", r.pass[2], "|M2 - mu r0^2| = " + format_double(r.m2_gap));
    line("(iv)  energy", r.pass[3],
         "E = " + format_double(r.energy) + "  gap = " + format_double(r.energy_gap) +
             " (c3 = " + format_double(k.c3) + ")");
    line("(v)   axial moment", r.pass[4], "A0 = " + format_double(r.a0));
    if (d.decomposition) {
        const auto& dc = *d.decomposition;
        line("decomposition", dc.holds,
             "sup w_d/r = " + format_double(dc.sup_wd_over_r) + "  bound = " + format_double(dc.bound) +
                 "  patch area = " + format_double(dc.patch_area) + "  core mass = " + format_double(dc.core_mass) +
                 "  |w_d|_1 = " + format_double(dc.wd_l1));
    }
    const bool all = r.all_pass() && (!d.decomposition || d.decomposition->holds);
    os << "result: " << (all ? "PASS" : "FAIL") << "\n";
    return os.str();
}

bool assumptions_hold(const InitialData& d) {
    return d.report.all_pass() && (!d.decomposition || d.decomposition->holds);
}

InitialData build_or_exit(SimConfig& sim) {
    try {
        return build_initial_data(sim);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // Rejected at seeding (decomposition inequality, empty or degenerate data).
        std::cerr << "ringlab: initial data rejected: " << e.what() << "\n";
        throw ExitRequest{assumption_failure};
    }
}

void write_text(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    os << s;
}

// ---------------------------------------------------------------- generate

void cmd_generate(const Overrides& o) {
    SimConfig sim = load_with_overrides(o);
    InitialData d = build_or_exit(sim);
    const fs::path out = sim.output;
    fs::create_directories(out);
    save_cloud(out / "initial.jsonl", d.cloud, RunState{0, sim.digest, version_string()});
    const std::string text = report_text(sim, d);
    write_text(out / "assumptions.txt", text);
    std::cout << text;
    if (!assumptions_hold(d)) throw ExitRequest{assumption_failure};
}

// ---------------------------------------------------------------- run

json fit_json(const std::optional<LinearFit>& f) {
    if (!f) return nullptr;
    return {{"slope", f->slope}, {"intercept", f->intercept}, {"residual", f->residual}, {"samples", f->samples}};
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fits_document(const SimConfig& sim, const Cloud& seed, std::span<const DiagnosticsRecord> recs) {
    const RunFits f = compute_run_fits(recs, seed.epsilon, seed.r0);
    json j;
    j["version"] = version_string();
    j["digest"] = sim.digest;
    j["scenario"] = std::string(to_string(sim.scenario));
    j["epsilon"] = seed.epsilon;
    j["v_kh"] = f.v_kh;
    j["records"] = recs.size();
    j["speed"] = fit_json(f.speed);
    j["a_slope"] = fit_json(f.a_slope);
    j["zbar_d"] = fit_json(f.zbar_d);
    j["diam_z_tagged"] = fit_json(f.diam_z_tagged);
    j["radial_envelope"] = number_or_null(f.radial_envelope);
    j["leak_envelope"] = number_or_null(f.leak_envelope);
    j["pair_conc_max"] = number_or_null(f.pair_conc_max);
    j["thickness_product_ratio"] = number_or_null(f.thickness_product_ratio);
    return j;
}

void write_csv_preamble(std::ostream& os, const SimConfig& sim) {
    os << "# ringlab diagnostics\n";
    os << "# version: " << version_string() << "\n";
    os << "# digest: " << sim.digest << "\n";
    write_csv_header(os);
}

fs::path checkpoint_path(const fs::path& out, std::int64_t step) {
    char name[48];
    std::snprintf(name, sizeof name, "ckpt_%010lld.jsonl", static_cast<long long>(step));
    return out / "checkpoints" / name;
}

void cmd_run(const Overrides& o, const std::string& resume) {
    SimConfig sim = load_with_overrides(o);
    InitialData d = build_or_exit(sim);
    if (!assumptions_hold(d)) {
        std::cerr << report_text(sim, d);
        throw ExitRequest{assumption_failure};
    }
    const fs::path out = sim.output;
    fs::create_directories(out);

    Cloud seed = d.cloud;
    RunSettings rs = run_settings(sim, seed);
    std::vector<DiagnosticsRecord> kept;
    if (!resume.empty()) {
        CloudFile cf = load_cloud(resume);
        if (!cf.state) throw ConfigError(resume + ": not a checkpoint (no run state)");
        if (cf.state->digest != sim.digest)
            throw ConfigError(resume + ": checkpoint digest " + cf.state->digest + " does not match config digest " +
                              sim.digest);
        seed = std::move(cf.cloud);
        rs.start_step = cf.state->step;
        // Earlier rows are carried over so the file matches an uninterrupted run.
        std::ifstream prev(out / "diagnostics.csv");
        if (prev) {
            for (const auto& r : read_diagnostics_csv(prev))
                if (r.step <= rs.start_step) kept.push_back(r);
        }
    }

    std::ofstream csv(out / "diagnostics.csv");
    if (!csv) throw Error("cannot write " + (out / "diagnostics.csv").string());
    write_csv_preamble(csv, sim);
    for (const auto& r : kept) write_csv_row(csv, r);
    csv.flush();

    const RunState state{0, sim.digest, version_string()};
    RunObserver obs;
    obs.on_record = [&](const DiagnosticsRecord& r) {
        write_csv_row(csv, r);
        csv.flush();
    };
    obs.on_checkpoint = [&](const Cloud& c, std::int64_t step, bool) {
        RunState st = state;
        st.step = step;
        save_cloud(checkpoint_path(out, step), c, st);
    };

    std::vector<DiagnosticsRecord> all = kept;
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    try {
        res = run(seed, rs, obs);
    } catch (const RunError& e) {
        csv.flush();
        std::cerr << "ringlab: run aborted: " << e.what() << "\n";
        std::cerr << "ringlab: last state written under " << (out / "checkpoints").string() << "\n";
        throw ExitRequest{runtime_failure};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all.insert(all.end(), res.records.begin(), res.records.end());

    RunState st = state;
    st.step = res.steps;
    save_cloud(out / "final.jsonl", res.final_cloud, st);
    json fits = fits_document(sim, d.cloud, all);
    write_text(out / "fits.json", fits.dump(2) + "\n");
    json cfg;
    cfg["version"] = version_string();
    cfg["digest"] = sim.digest;
    cfg["config"] = json::parse(sim.canonical_json);
    write_text(out / "config.json", cfg.dump(2) + "\n");

    std::cout << "steps " << res.steps << "  t " << format_double(res.final_cloud.time) << "  wall " << wall
              << " s\n";
    if (fits["speed"].is_object())
        std::cout << "speed slope " << format_double(fits["speed"]["slope"].get<double>()) << "  V_eps "
                  << format_double(fits["v_kh"].get<double>()) << "\n";
}

// ---------------------------------------------------------------- kernel-table

struct TableOptions {
    double min = 1e-6;
    double max = 1e3;
    int points = 200;
    bool oracle = false;
    std::string out;
};

void cmd_kernel_table(const TableOptions& t) {
    if (!(t.min > 0.0) || !std::isfinite(t.max)) throw ConfigError("kernel-table: range must satisfy 0 < min <= max");
    if (t.max < t.min) throw ConfigError("kernel-table: descending range (min > max)");
    if (t.points < 1) throw ConfigError("kernel-table: --points must be >= 1");
    const int n = t.min == t.max ? 1 : t.points;
    if (n == 1 && t.min != t.max) throw ConfigError("kernel-table: one point needs min == max");

    std::ofstream file;
    if (!t.out.empty()) {
        file.open(t.out);
        if (!file) throw Error("cannot write " + t.out);
    }
    std::ostream& os = t.out.empty() ? std::cout : file;
    os << "# ringlab kernel table\n# version: " << version_string() << "\n";
    os << "s,F,F1,F2,branch";
    if (t.oracle) os << ",quad_F,quad_F_err,quad_F1,quad_F1_err,quad_F2,quad_F2_err";
    os << "\n";
    const KernelConfig k;
    const double la = std::log10(t.min), lb = std::log10(t.max);
    for (int i = 0; i < n; ++i) {
        double s = n == 1 ? t.min : std::pow(10.0, la + (lb - la) * i / (n - 1));
        if (i == 0) s = t.min;
        if (i == n - 1) s = t.max;
        os << format_double(s) << ',' << format_double(eval_F(s, k)) << ',' << format_double(eval_F1(s, k)) << ','
           << format_double(eval_F2(s, k)) << ',' << to_string(branch_for(s, k));
        if (t.oracle) {
            for (const auto& q : {oracle::quad_F(s), oracle::quad_F1(s), oracle::quad_F2(s)})
                os << ',' << format_double(q.value) << ',' << format_double(q.abs_err_estimate);
        }
        os << "\n";
    }
}

// ---------------------------------------------------------------- diag

void cmd_diag(const Overrides& o, const std::string& checkpoint) {
    CloudFile cf = load_cloud(checkpoint);
    KernelConfig k;
    DiagnosticsSettings ds;
    std::string digest = cf.digest;
    if (!o.config.empty()) {
        SimConfig sim = load_with_overrides(o);
        k = resolved_kernel(sim, cf.cloud);
        ds = sim.diagnostics;
        ds.workers = sim.workers;
    } else {
        if (!(cf.cloud.h > 0.0)) throw ConfigError(checkpoint + ": no seeding spacing in header; pass --config");
        k.delta = o.delta_over_h.value_or(1.5) * cf.cloud.h;
        ds.workers = o.workers.value_or(std::max(1, env_workers()));
    }
    const std::int64_t step = cf.state ? cf.state->step : 0;
    const DiagnosticsRecord rec = compute_record(cf.cloud, k, ds, step);
    std::cout << "# ringlab diagnostics\n# version: " << version_string() << "\n";
    if (!digest.empty()) std::cout << "# digest: " << digest << "\n";
    write_csv_header(std::cout);
    write_csv_row(std::cout, rec);
}

// ---------------------------------------------------------------- compare

struct Series {
    std::string digest;
    std::vector<DiagnosticsRecord> rows;
    std::optional<Cloud> final_cloud;
};

Series load_series(const std::string& arg) {
    fs::path p = arg;
    Series s;
    fs::path csv = p;
    if (fs::is_directory(p)) {
        csv = p / "diagnostics.csv";
        if (fs::exists(p / "final.jsonl")) s.final_cloud = load_cloud(p / "final.jsonl").cloud;
    }
    std::ifstream is(csv);
    if (!is) throw ConfigError("compare: cannot open " + csv.string());
    std::string line;
    std::stringstream body;
    while (std::getline(is, line)) {
        if (line.rfind("# digest:", 0) == 0) {
            s.digest = line.substr(9);
            s.digest.erase(0, s.digest.find_first_not_of(' '));
        }
        body << line << "\n";
    }
    if (s.digest.empty()) throw ConfigError("compare: " + csv.string() + " carries no config digest");
    s.rows = read_diagnostics_csv(body);
    return s;
}

struct CompareOptions {
    std::string a, b;
    std::string mode = "plain";
    double lambda = 1.0;
    double gamma = 1.0;
};

// Column transform: value in A -> expected value in B; nullopt skips the column.
using ColumnMap = std::function<std::optional<double>(const std::string&, double)>;

void cmd_compare(const CompareOptions& o) {
    const Series A = load_series(o.a);
    const Series B = load_series(o.b);
    if (A.rows.size() != B.rows.size())
        throw ConfigError("compare: incompatible series (" + std::to_string(A.rows.size()) + " vs " +
                          std::to_string(B.rows.size()) + " rows)");
    for (std::size_t i = 0; i < A.rows.size(); ++i)
        if (A.rows[i].step != B.rows[i].step)
            throw ConfigError("compare: incompatible series (step " + std::to_string(A.rows[i].step) + " vs " +
                              std::to_string(B.rows[i].step) + " at row " + std::to_string(i) + ")");

    const double L = o.lambda, G = o.gamma;
    ColumnMap map;
    if (o.mode == "plain") {
        map = [](const std::string&, double v) { return std::optional<double>(v); };
    } else if (o.mode == "mirror") {
        map = [](const std::string& c, double v) -> std::optional<double> {
            if (c == "t" || c == "z_star" || c == "zbar_d") return -v;
            if (c == "thickness_proxy") return std::nullopt;
            return v;
        };
    } else if (o.mode == "scaling") {
        if (!(L > 0.0 && G > 0.0)) throw ConfigError("compare: scaling needs lambda > 0 and gamma > 0");
        map = [L, G](const std::string& c, double v) -> std::optional<double> {
            if (c == "step") return v;
            if (c == "t") return v / G;
            if (c == "m0" || c == "leak_plain") return v * G / (L * L);
            if (c == "m2") return v * G / (L * L * L * L);
            if (c == "energy_e") return v * G * G / std::pow(L, 5);
            if (c == "r_star" || c == "z_star" || c == "zbar_d" || c == "diam_z_all" || c == "diam_z_tagged" ||
                c == "thickness_proxy")
                return v / L;
            if (c == "v_kh") return v * G / L;
            return std::nullopt;  // energy_e1, a_t, leak_weighted, pair_conc: not homogeneous
        };
    } else {
        throw ConfigError("compare: unknown mode '" + o.mode + "' (plain, mirror, scaling)");
    }

    const auto& cols = diagnostics_columns();
    std::vector<double> max_abs(cols.size(), 0.0), max_rel(cols.size(), 0.0);
    std::vector<bool> used(cols.size(), false);
    std::size_t nan_mismatch = 0;
    for (std::size_t i = 0; i < A.rows.size(); ++i) {
        const auto va = record_values(A.rows[i]);
        const auto vb = record_values(B.rows[i]);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const auto expect = map(cols[c], va[c]);
            if (!expect) continue;
            used[c] = true;
            const double x = *expect, y = vb[c];
            if (std::isnan(x) || std::isnan(y)) {
                if (std::isnan(x) != std::isnan(y)) ++nan_mismatch;
                continue;
            }
            const double d = std::abs(x - y);
            const double scale = std::max(std::abs(x), std::abs(y));
            max_abs[c] = std::max(max_abs[c], d);
            if (scale > 0.0) max_rel[c] = std::max(max_rel[c], d / scale);
        }
    }
    json rep;
    rep["mode"] = o.mode;
    if (o.mode == "scaling") rep["lambda"] = L, rep["gamma"] = G;
    rep["digest_a"] = A.digest;
    rep["digest_b"] = B.digest;
    rep["rows"] = A.rows.size();
    rep["nan_mismatch"] = nan_mismatch;
    json colrep = json::object();
    for (std::size_t c = 0; c < cols.size(); ++c)
        if (used[c]) colrep[cols[c]] = {{"max_abs", max_abs[c]}, {"max_rel", max_rel[c]}};
    rep["columns"] = colrep;

    if (A.final_cloud && B.final_cloud && A.final_cloud->size() == B.final_cloud->size()) {
        Cloud ta = *A.final_cloud;
        if (o.mode == "mirror") ta = mirror_z(ta);
        if (o.mode == "scaling") ta = scale(ta, L, G);
        const double r0 = B.final_cloud->r0;
        double dev = 0.0;
        for (std::size_t i = 0; i < ta.size(); ++i) {
            const auto& p = ta.particles[i];
            const auto& q = B.final_cloud->particles[i];
            dev = std::max(dev, std::hypot(p.r - q.r, p.z - q.z) / r0);
        }
        rep["final_positions_max_rel"] = dev;
    }
    std::cout << rep.dump(2) << "\n";
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
    std::size_t n = 10000;
    double theta = 0.5;
    int degree = 8;
    std::size_t leaf = 32;
    double epsilon = 0.01;
    bool extended = false;
    std::size_t direct_sample = 0;
    int workers = 0;
};

void cmd_bench(const BenchOptions& b) {
    if (!(b.theta > 0.0 && b.theta < 1.0)) throw ConfigError("bench: theta must lie in (0, 1)");
    if (b.n < 202) throw ConfigError("bench: -n must be >= 202");
    const int workers = b.workers > 0 ? b.workers : std::max(1, env_workers());
    const double hoe = std::sqrt(std::numbers::pi / static_cast<double>(b.n));
    BlobParams bp;
    bp.epsilon = b.epsilon;
    bp.h = hoe * b.epsilon;
    bp.profile = normalize_on_grid(Profile::flat(), hoe);
    const Cloud c = generate_blob(bp);
    KernelConfig k;
    k.delta = 1.5 * c.h;
    const auto targets = c.positions();

    using clock = std::chrono::steady_clock;
    const std::size_t m = b.direct_sample > 0 ? std::min(b.direct_sample, c.size()) : c.size();
    std::vector<KernelPoint> sample(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(m));
    auto t0 = clock::now();
    const auto direct = velocity_direct(c, sample, k, workers);
    const double t_direct = std::chrono::duration<double>(clock::now() - t0).count() *
                            static_cast<double>(c.size()) / static_cast<double>(m);

    t0 = clock::now();
    const Tree tree = build_tree(c, {b.leaf, b.degree});
    const auto tc = velocity_treecode(c, tree, targets, b.theta, k, workers);
    const double t_tree = std::chrono::duration<double>(clock::now() - t0).count();

    std::vector<VelocitySample> ref;
    if (b.extended)
        ref = oracle::direct_velocity_reference(c, sample, k);
    else
        ref = direct;
    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double nrm = std::hypot(ref[i].u_r, ref[i].u_z);
        if (nrm > 0.0) err = std::max(err, std::hypot(tc[i].u_r - ref[i].u_r, tc[i].u_z - ref[i].u_z) / nrm);
    }
    json rep;
    rep["version"] = version_string();
    rep["particles"] = c.size();
    rep["theta"] = b.theta;
    rep["degree"] = b.degree;
    rep["leaf_capacity"] = b.leaf;
    rep["workers"] = workers;
    rep["direct_seconds"] = t_direct;
    rep["direct_estimated"] = m < c.size();
    rep["treecode_seconds"] = t_tree;
    rep["speedup"] = t_direct / t_tree;
    rep["reference"] = b.extended ? "extended" : "direct";
    rep["compared_targets"] = m;
    rep["max_rel_error"] = err;
    std::cout << rep.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ringlab: axisymmetric vortex ring particle simulations"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    Overrides gen_o, run_o, diag_o;
    std::string resume, checkpoint;
    TableOptions table;
    CompareOptions cmp;
    BenchOptions bench;

    auto* gen = app.add_subcommand("generate", "seed the initial cloud and check the hypotheses");
    add_common(gen, gen_o, true);

    auto* runc = app.add_subcommand("run", "integrate a scenario and write diagnostics");
    add_common(runc, run_o, true);
    runc->add_option("--resume", resume, "checkpoint to resume from")->check(CLI::ExistingFile);

    auto* kt = app.add_subcommand("kernel-table", "tabulate F, F1, F2 on a log grid");
    kt->add_option("--min", table.min, "smallest argument");
    kt->add_option("--max", table.max, "largest argument");
    kt->add_option("--points", table.points, "number of log-spaced points");
    kt->add_flag("--oracle", table.oracle, "append quadrature reference columns");
    kt->add_option("--out", table.out, "output file (default stdout)");

    auto* dg = app.add_subcommand("diag", "recompute diagnostics from a checkpoint");
    add_common(dg, diag_o, false);
    dg->add_option("--checkpoint", checkpoint, "cloud file")->required()->check(CLI::ExistingFile);

    auto* cp = app.add_subcommand("compare", "compare two runs under a symmetry transform");
    cp->add_option("run_a", cmp.a, "run directory or diagnostics CSV")->required();
    cp->add_option("run_b", cmp.b, "run directory or diagnostics CSV")->required();
    cp->add_option("--mode", cmp.mode, "plain, mirror or scaling")
        ->check(CLI::IsMember({"plain", "mirror", "scaling"}));
    cp->add_option("--lambda", cmp.lambda, "spatial scale factor");
    cp->add_option("--gamma", cmp.gamma, "amplitude scale factor");

    auto* bn = app.add_subcommand("bench", "direct vs treecode velocity evaluation");
    bn->add_option("-n", bench.n, "number of particles");
    bn->add_option("--theta", bench.theta, "opening angle");
    bn->add_option("--degree", bench.degree, "interpolation degree");
    bn->add_option("--leaf", bench.leaf, "leaf capacity");
    bn->add_option("--epsilon", bench.epsilon, "core size");
    bn->add_flag("--extended", bench.extended, "compare against the extended-precision reference");
    bn->add_option("--direct-sample", bench.direct_sample, "time direct summation on this many targets only");
    bn->add_option("--workers", bench.workers, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (gen->parsed()) cmd_generate(gen_o);
        if (runc->parsed()) cmd_run(run_o, resume);
        if (kt->parsed()) cmd_kernel_table(table);
        if (dg->parsed()) cmd_diag(diag_o, checkpoint);
        if (cp->parsed()) cmd_compare(cmp);
        if (bn->parsed()) cmd_bench(bench);
    } catch (const ExitRequest& x) {
        return x.code;
    } catch (const ConfigError& e) {
        std::cerr << "ringlab: config error: " << e.what() << "\n";
        return config_error;
    } catch (const RunError& e) {
        std::cerr << "ringlab: runtime failure: " << e.what() << "\n";
        return runtime_failure;
    } catch (const std::exception& e) {
        std::cerr << "ringlab: error: " << e.what() << "\n";
        return runtime_failure;
    }
    return ok;
}
