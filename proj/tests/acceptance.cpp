// Acceptance suite. Prints one PASS/FAIL line per criterion; the exit status
// is nonzero when any selected criterion fails.
//
// Long simulations are cached under --cache keyed by the config digest, so
// the criteria that share a run (2, 3, 4, 5, 9) integrate it once.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ringlab/cloud.hpp"
#include "ringlab/config.hpp"
#include "ringlab/diagnostics.hpp"
#include "ringlab/integrator.hpp"
#include "ringlab/io.hpp"
#include "ringlab/kernels.hpp"
#include "ringlab/oracle.hpp"
#include "ringlab/velocity.hpp"

using namespace ringlab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- tolerances

constexpr double kKernelRelTol = 1e-8;
constexpr int kKernelPoints = 200;
constexpr double kRemainderSpread = 2.0;  // max / min of the normalized remainder over the three s
constexpr double kKernelSeconds = 60.0;

constexpr double kM2Drift = 1e-3;
constexpr double kEnergyDrift = 1e-2;
constexpr double kRunSeconds = 600.0;

// A constant fitted at eps = 1e-2 is the measured value times this margin.
constexpr double kFitMargin = 1.5;

constexpr double kOffsetAgreement = 0.25;
constexpr double kSlopeDifference = 0.10;

constexpr double kDiamSlope = 0.3;
constexpr double kZdSlope = 0.25;
constexpr double kThicknessRatio = 3.0;

constexpr double kMirrorTol = 1e-12;
constexpr double kScalingTol = 1e-6;
constexpr double kIdempotenceTol = 1e-12;

constexpr double kTreeTol = 1e-6;
constexpr double kTreeTheta = 0.5;
constexpr double kSpeedupWanted = 5.0;

const std::vector<double> kEpsilons = {1e-2, 3e-3, 1e-3};

struct Options {
    fs::path cache = "acceptance_cache";
    bool full = false;
    int workers = 1;
    std::size_t soft_n = 100000;
};
Options opt;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- run cache

struct Run {
    SimConfig sim;
    Cloud initial;
    Cloud final_cloud;
    std::vector<DiagnosticsRecord> records;
    RunFits fits;
    double seconds = 0.0;
    std::int64_t steps = 0;
    bool cached = false;
};

Run cached_run(const std::string& config) {
    Run r;
    r.sim = parse_config(config);
    r.sim.workers = opt.workers;
    InitialData init = build_initial_data(r.sim);
    r.initial = init.cloud;
    const fs::path dir = opt.cache / r.sim.digest;

    if (fs::exists(dir / "meta.json")) {
        std::ifstream meta(dir / "meta.json");
        const json m = json::parse(meta);
        r.seconds = m.at("seconds").get<double>();
        r.steps = m.at("steps").get<std::int64_t>();
        std::ifstream csv(dir / "diagnostics.csv");
        r.records = read_diagnostics_csv(csv);
        r.final_cloud = load_cloud(dir / "final.jsonl").cloud;
        r.cached = true;
    } else {
        const auto t0 = std::chrono::steady_clock::now();
        const RunResult res = run(init.cloud, run_settings(r.sim, init.cloud));
        r.seconds = seconds_since(t0);
        r.steps = res.steps;
        r.records = res.records;
        r.final_cloud = res.final_cloud;

        const fs::path tmp = opt.cache / (r.sim.digest + ".partial");
        fs::remove_all(tmp);
        fs::create_directories(tmp);
        {
            std::ofstream csv(tmp / "diagnostics.csv");
            write_csv_header(csv);
            for (const auto& rec : r.records) write_csv_row(csv, rec);
        }
        save_cloud(tmp / "final.jsonl", r.final_cloud, RunState{r.steps, r.sim.digest, version_string()},
                   r.sim.digest);
        std::ofstream(tmp / "config.json") << r.sim.canonical_json << "\n";
        std::ofstream(tmp / "meta.json") << json{{"seconds", r.seconds}, {"steps", r.steps}}.dump() << "\n";
        fs::remove_all(dir);
        fs::rename(tmp, dir);
    }
    r.fits = compute_run_fits(r.records, r.initial.epsilon, r.initial.r0);
    return r;
}

// Thin ring at eps with the desk horizon (4 / V_eps at 1e-2, shorter below).
std::string thin_ring_config(double eps) {
    json j = {{"schema_version", 1}, {"data", {{"epsilon", eps}}}};
    if (!opt.full) {
        if (eps == 3e-3) j["integrator"]["t_end"] = 0.3;
        if (eps == 1e-3) j["integrator"]["t_end"] = 0.03;
    }
    return j.dump();
}

std::map<double, Run>& thin_runs() {
    static std::map<double, Run> runs;
    return runs;
}

const Run& thin_ring(double eps) {
    auto& runs = thin_runs();
    auto it = runs.find(eps);
    if (it == runs.end()) it = runs.emplace(eps, cached_run(thin_ring_config(eps))).first;
    return it->second;
}

std::string run_note(const Run& r) {
    return "eps=" + fmt(r.initial.epsilon) + " N=" + std::to_string(r.initial.size()) + " t_end=" +
           fmt(r.final_cloud.time) + " steps=" + std::to_string(r.steps) + " " + fmt(r.seconds, 3) + "s" +
           (r.cached ? " (cached)" : "");
}

// ---------------------------------------------------------------- criteria

Outcome kernels() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int i = 0; i < kKernelPoints; ++i) {
        const double s = std::pow(10.0, -6.0 + 9.0 * i / (kKernelPoints - 1));
        const auto rd = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
        worst = std::max({worst, rd(eval_F(s), oracle::quad_F(s).value), rd(eval_F1(s), oracle::quad_F1(s).value),
                          rd(eval_F2(s), oracle::quad_F2(s).value)});
    }

    // Remainders of the printed expansions divided by their claimed order.
    const auto spread = [](const std::function<double(double)>& normalized) {
        double lo = INFINITY, hi = 0.0;
        for (double s : {1e-2, 1e-3, 1e-4}) {
            const double v = std::abs(normalized(s));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return lo > 0.0 ? hi / lo : INFINITY;
    };
    const double sF = spread([](double s) { return (eval_F(s) - oracle::asymptotic_F(s)) / (s * std::log(1.0 / s)); });
    const double sF1 = spread([](double s) { return eval_F1(s) - oracle::asymptotic_F1(s); });
    const double sF2 = spread([](double s) { return (eval_F2(s) - oracle::asymptotic_F2(s)) / (s * s); });
    const double secs = seconds_since(t0);

    Outcome o;
    o.pass = worst <= kKernelRelTol && sF <= kRemainderSpread && sF1 <= kRemainderSpread &&
             sF2 <= kRemainderSpread && secs <= kKernelSeconds;
    o.detail = "max rel err " + fmt(worst, 3) + " (<= " + fmt(kKernelRelTol) + "); remainder spread F " + fmt(sF) +
               ", F1 " + fmt(sF1) + ", F2 " + fmt(sF2) + " (<= " + fmt(kRemainderSpread) + "); " + fmt(secs, 3) + "s";
    return o;
}

Outcome conservation() {
    const Run& r = thin_ring(1e-2);
    const auto& first = r.records.front();
    bool m0_const = true;
    double dm2 = 0.0, de = 0.0;
    for (const auto& rec : r.records) {
        m0_const = m0_const && rec.m0 == first.m0;
        dm2 = std::max(dm2, std::abs(rec.m2 - first.m2) / first.m2);
        de = std::max(de, std::abs(rec.energy_e - first.energy_e) / std::abs(first.energy_e));
    }
    Outcome o;
    o.pass = m0_const && dm2 <= kM2Drift && de <= kEnergyDrift && r.seconds <= kRunSeconds;
    o.detail = std::string("M0 ") + (m0_const ? "bitwise constant" : "DRIFTS") + "; |dM2|/M2 " + fmt(dm2, 3) +
               "; |dE|/|E| " + fmt(de, 3) + "; " + run_note(r);
    return o;
}

Outcome radial_lock() {
    const Run& ref = thin_ring(1e-2);
    const double c_r = kFitMargin * ref.fits.radial_envelope;
    const double c_l = kFitMargin * ref.fits.leak_envelope;
    bool pass = true;
    std::string d = "C_r " + fmt(c_r, 3) + ", C_leak " + fmt(c_l, 3) + ";";
    for (double eps : kEpsilons) {
        const Run& r = thin_ring(eps);
        pass = pass && r.fits.radial_envelope <= c_r && r.fits.leak_envelope <= c_l;
        d += " eps " + fmt(eps) + ": " + fmt(r.fits.radial_envelope, 3) + " / " + fmt(r.fits.leak_envelope, 3) + ";";
    }
    return {pass, d + " values are max|r*-r0| |log eps| / max leak_weighted |log eps|"};
}

Outcome speed_law() {
    const Run& a = thin_ring(1e-2);
    const Run& b = thin_ring(1e-3);
    if (!a.fits.speed || !b.fits.speed) return {false, "speed fit unavailable"};
    const double off_a = a.fits.speed->slope - a.fits.v_kh;
    const double off_b = b.fits.speed->slope - b.fits.v_kh;
    const double agree = std::abs(off_a - off_b) / std::max(std::abs(off_a), std::abs(off_b));
    const double predicted = b.fits.v_kh - a.fits.v_kh;  // (mu / 4 pi r0) log(eps_a / eps_b)
    const double measured = b.fits.speed->slope - a.fits.speed->slope;
    const double diff_err = std::abs(measured - predicted) / std::abs(predicted);
    Outcome o;
    o.pass = agree <= kOffsetAgreement && diff_err <= kSlopeDifference;
    o.detail = "slopes " + fmt(a.fits.speed->slope, 5) + " / " + fmt(b.fits.speed->slope, 5) + ", V_eps " +
               fmt(a.fits.v_kh, 5) + " / " + fmt(b.fits.v_kh, 5) + "; offsets " + fmt(off_a, 4) + " / " +
               fmt(off_b, 4) + " differ by " + fmt(100 * agree, 3) + "% (<= " + fmt(100 * kOffsetAgreement) +
               "%); slope difference " + fmt(measured, 4) + " vs " + fmt(predicted, 4) + " (" +
               fmt(100 * diff_err, 3) + "%, <= " + fmt(100 * kSlopeDifference) + "%)";
    return o;
}

Outcome moving_barrier() {
    const Run& ref = thin_ring(1e-2);
    if (!ref.fits.a_slope) return {false, "A(t) fit unavailable"};
    const double c1 = kFitMargin * std::abs(ref.fits.a_slope->slope);
    bool pass = true;
    std::string d = "C1 " + fmt(c1, 3) + ";";
    for (double eps : kEpsilons) {
        const Run& r = thin_ring(eps);
        if (!r.fits.a_slope) return {false, "A(t) fit unavailable at eps " + fmt(eps)};
        pass = pass && r.fits.a_slope->slope <= c1;
        d += " eps " + fmt(eps) + ": slope " + fmt(r.fits.a_slope->slope, 3) + ";";
    }
    return {pass, d};
}

Outcome filamentation() {
    const Run r = cached_run(R"({"schema_version": 1, "scenario": "fat_ring"})");
    const auto& f = r.fits;
    if (!f.diam_z_tagged || !f.zbar_d) return {false, "tagged fits unavailable"};
    const double diam = f.diam_z_tagged->slope / f.v_kh;
    const double zd = f.zbar_d->slope / f.v_kh;
    Outcome o;
    o.pass = diam >= kDiamSlope && zd <= kZdSlope && f.thickness_product_ratio < kThicknessRatio;
    o.detail = "diam_z slope " + fmt(diam, 3) + " V_eps (>= " + fmt(kDiamSlope) + "); Z_d slope " + fmt(zd, 3) +
               " V_eps (<= " + fmt(kZdSlope) + "); thickness*diam ratio " + fmt(f.thickness_product_ratio, 3) +
               " (< " + fmt(kThicknessRatio) + "); " + run_note(r);
    return o;
}

double max_position_dev(const Cloud& a, const Cloud& b) {
    double dev = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& p = a.particles[i];
        const auto& q = b.particles[i];
        dev = std::max(dev, std::hypot(p.r - q.r, p.z - q.z) / b.r0);
    }
    return dev;
}

double normalized_dev(const Cloud& c) {
    const Cloud n1 = normalize(c).cloud;
    const Cloud n2 = normalize(n1).cloud;
    double dev = 0.0;
    for (std::size_t i = 0; i < n1.size(); ++i) {
        const auto& p = n1.particles[i];
        const auto& q = n2.particles[i];
        dev = std::max({dev, std::abs(p.r - q.r) / std::abs(p.r), std::abs(p.z - q.z) / std::abs(p.r),
                        std::abs(p.gamma - q.gamma) / std::abs(p.gamma)});
    }
    return dev;
}

Outcome symmetry() {
    const std::string base = R"({"schema_version": 1, "data": {"z0": 0.1}, "integrator": {"t_end_kh": 0.25)";
    const Run fwd = cached_run(base + "}}");
    const Run mir = cached_run(R"({"schema_version": 1, "data": {"z0": 0.1, "transform": {"mirror": true}},
      "integrator": {"t_end_kh": 0.25, "reverse": true}})");
    // Power-of-two factors keep the scaled run on the same step sequence bitwise.
    const Run sc = cached_run(R"({"schema_version": 1, "data": {"z0": 0.1, "transform": {"lambda": 2, "gamma": 4}},
      "integrator": {"t_end_kh": 0.25}})");
    const Run generic = cached_run(R"({"schema_version": 1, "data": {"z0": 0.1, "transform": {"lambda": 1.5, "gamma": 0.75}},
      "integrator": {"t_end_kh": 0.25}})");

    // Mirror: diagnostics series column by column, then final positions.
    double mirror_dev = 0.0;
    bool rows_match = fwd.records.size() == mir.records.size();
    const auto& cols = diagnostics_columns();
    for (std::size_t i = 0; rows_match && i < fwd.records.size(); ++i) {
        const auto va = record_values(fwd.records[i]);
        const auto vb = record_values(mir.records[i]);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (cols[c] == "thickness_proxy") continue;
            const bool odd = cols[c] == "t" || cols[c] == "z_star" || cols[c] == "zbar_d";
            const double x = odd ? -va[c] : va[c], y = vb[c];
            if (std::isnan(x) || std::isnan(y)) {
                rows_match = rows_match && std::isnan(x) == std::isnan(y);
                continue;
            }
            const double s = std::max(std::abs(x), std::abs(y));
            if (s > 0.0) mirror_dev = std::max(mirror_dev, std::abs(x - y) / s);
        }
    }
    const double mirror_pos = max_position_dev(mirror_z(fwd.final_cloud), mir.final_cloud);

    const bool same_steps = sc.steps == fwd.steps;
    const double scale_dev = max_position_dev(scale(fwd.final_cloud, 2.0, 4.0), sc.final_cloud);
    const double generic_dev = max_position_dev(scale(fwd.final_cloud, 1.5, 0.75), generic.final_cloud);

    double idem = 0.0;
    for (const Cloud* c : {&fwd.initial, &fwd.final_cloud, &sc.final_cloud}) idem = std::max(idem, normalized_dev(*c));

    Outcome o;
    o.pass = rows_match && mirror_dev <= kMirrorTol && mirror_pos <= kMirrorTol && same_steps &&
             scale_dev <= kScalingTol && idem <= kIdempotenceTol;
    o.detail = "mirror: series " + fmt(mirror_dev, 3) + ", positions " + fmt(mirror_pos, 3) + " (<= " +
               fmt(kMirrorTol) + "); scaling (2, 4): steps " + std::to_string(fwd.steps) + "/" +
               std::to_string(sc.steps) + ", positions " + fmt(scale_dev, 3) + " (<= " + fmt(kScalingTol) +
               "); (1.5, 0.75), not matched, info only: steps " + std::to_string(generic.steps) + ", positions " +
               fmt(generic_dev, 3) + "; normalize idempotence " + fmt(idem, 3) + " (<= " + fmt(kIdempotenceTol) + ")";
    return o;
}

Cloud flat_blob(std::size_t n) {
    const double hoe = std::sqrt(std::numbers::pi / static_cast<double>(n));
    BlobParams bp;
    bp.epsilon = 1e-2;
    bp.h = hoe * bp.epsilon;
    bp.profile = normalize_on_grid(Profile::flat(), hoe);
    return generate_blob(bp);
}

Outcome treecode() {
    const Cloud c = flat_blob(10000);
    KernelConfig k;
    k.delta = 1.5 * c.h;
    const auto targets = c.positions();
    const Tree tree = build_tree(c, {32, 8});
    const auto tc = velocity_treecode(c, tree, targets, kTreeTheta, k, opt.workers);
    const auto ref = oracle::direct_velocity_reference(c, targets, k);
    double err = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double nrm = std::hypot(ref[i].u_r, ref[i].u_z);
        if (nrm > 0.0) err = std::max(err, std::hypot(tc[i].u_r - ref[i].u_r, tc[i].u_z - ref[i].u_z) / nrm);
    }

    // Soft part: wall time at 1e5; direct time extrapolated from a target sample.
    const Cloud big = flat_blob(opt.soft_n);
    KernelConfig kb;
    kb.delta = 1.5 * big.h;
    const auto bt = big.positions();
    const std::size_t m = std::min<std::size_t>(1000, bt.size());
    const std::vector<KernelPoint> sample(bt.begin(), bt.begin() + static_cast<std::ptrdiff_t>(m));
    auto t0 = std::chrono::steady_clock::now();
    velocity_direct(big, sample, kb, opt.workers);
    const double t_direct = seconds_since(t0) * static_cast<double>(bt.size()) / static_cast<double>(m);
    t0 = std::chrono::steady_clock::now();
    const Tree bigtree = build_tree(big, {32, 8});
    velocity_treecode(big, bigtree, bt, kTreeTheta, kb, opt.workers);
    const double t_tree = seconds_since(t0);
    const double speedup = t_direct / t_tree;

    Outcome o;
    o.pass = err <= kTreeTol;
    o.detail = "N=" + std::to_string(c.size()) + " theta " + fmt(kTreeTheta) + ": max rel err " + fmt(err, 3) +
               " vs extended reference (<= " + fmt(kTreeTol) + "); N=" + std::to_string(big.size()) +
               " speedup " + fmt(speedup, 3) + "x (soft, wanted >= " + fmt(kSpeedupWanted) + ": " +
               (speedup >= kSpeedupWanted ? "met" : "not met") + ")";
    return o;
}

Outcome pair_envelope() {
    // max over the seed, the final state and (at R = eps^{-1/2}) the recorded series
    const auto envelope = [](const Run& r) {
        const double eps = r.initial.epsilon;
        double worst = 0.0;
        for (double p : {0.25, 0.5, 0.75}) {
            const double R = std::pow(eps, -p);
            double v = std::max(pair_concentration(r.initial, R), pair_concentration(r.final_cloud, R));
            if (p == 0.5)
                for (const auto& rec : r.records) v = std::max(v, rec.pair_conc);
            worst = std::max(worst, v * std::log(R));
        }
        return worst;
    };
    const double c = kFitMargin * envelope(thin_ring(1e-2));
    bool pass = true;
    std::string d = "C " + fmt(c, 3) + ";";
    for (double eps : kEpsilons) {
        const double e = envelope(thin_ring(eps));
        pass = pass && e <= c;
        d += " eps " + fmt(eps) + ": max P(R) log R " + fmt(e, 3) + ";";
    }
    return {pass, d};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "kernel oracle equivalence", kernels},
        {2, "conservation", conservation},
        {3, "radial lock and concentration", radial_lock},
        {4, "Kelvin-Hicks speed law", speed_law},
        {5, "moving barrier", moving_barrier},
        {6, "filamentation", filamentation},
        {7, "symmetry", symmetry},
        {8, "treecode", treecode},
        {9, "pair-concentration envelope", pair_envelope},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ringlab acceptance suite"};
    std::vector<int> only;
    bool clean = false;
    app.add_option("-c,--criterion", only, "criteria to run (default: all)")->check(CLI::Range(1, 9));
    app.add_option("--cache", opt.cache, "run cache directory");
    app.add_flag("--clean-cache", clean, "remove the run cache and exit");
    app.add_flag("--full", opt.full, "use the 4 / V_eps horizon at every eps");
    app.add_option("--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--soft-n", opt.soft_n, "particle count of the soft timing check");
    CLI11_PARSE(app, argc, argv);

    if (clean) {
        fs::remove_all(opt.cache);
        std::cout << "removed " << opt.cache.string() << "\n";
        return 0;
    }
    fs::create_directories(opt.cache);

    bool all_pass = true;
    for (const auto& c : criteria()) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all_pass = all_pass && o.pass;
        std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail
                  << std::endl;
    }
    return all_pass ? 0 : 1;
}
