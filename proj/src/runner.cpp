#include "lqswitch/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lqswitch/lq.hpp"
#include "lqswitch/rng.hpp"

namespace lqswitch {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct ResultRow {
    std::string id;
    std::string kind;
    std::string label;
    double value = 0.0;
    double std_error = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

std::uint64_t fnv1a64_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

ControlSpec build_control(const json& c, const RiccatiSolution* sol, int kdim) {
    const std::string type = c.at("type").get<std::string>();
    if (type == "zero") return ControlSpec::zero();
    if (type == "feedback") {
        if (!sol) throw std::runtime_error("feedback control needs a solved field");
        return ControlSpec::feedback(sol->P);
    }
    if (type == "feedback_plus_const") {
        if (!sol) throw std::runtime_error("feedback control needs a solved field");
        Vector offset(kdim);
        for (int i = 0; i < kdim; ++i) offset(i) = c.at("offset").at(i).get<double>();
        return ControlSpec::feedback_with_offset(
            sol->P, [offset](double, double, int) { return offset; },
            offset.norm());
    }
    Vector u(kdim);
    for (int i = 0; i < kdim; ++i) u(i) = c.at("u").at(i).get<double>();
    return ControlSpec::make_open_loop([u](double, double, int) { return u; },
                                       u.norm());
}

Vector vector_param(const json& params, const char* name, int dim) {
    Vector x(dim);
    for (int i = 0; i < dim; ++i) x(i) = params.at(name).at(i).get<double>();
    return x;
}

const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Renders the run outputs: cost-vs-control bars from results.csv and a
p_11(t, e) heatmap per mark from the P-field CSVs. Writes PNGs next to the
CSVs."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def plot_costs():
    path = os.path.join(here, "results.csv")
    if not os.path.exists(path):
        return
    labels, values, errors = [], [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            if row["label"].startswith("cost:"):
                labels.append(row["id"] + "/" + row["label"][5:])
                values.append(float(row["value"]))
                errors.append(float(row["std_error"]))
    if not labels:
        return
    fig, ax = plt.subplots(figsize=(1.5 + 0.9 * len(labels), 4))
    ax.bar(range(len(labels)), values, yerr=[3 * e for e in errors], capsize=4)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("estimated cost (3 SE bars)")
    fig.tight_layout()
    fig.savefig(os.path.join(here, "costs.png"), dpi=150)


def plot_field(name):
    path = os.path.join(here, name)
    if not os.path.exists(path):
        return
    data = {}
    with open(path) as fh:
        for row in csv.DictReader(fh):
            key = row["mark"]
            data.setdefault(key, {})[(float(row["t"]), float(row["e"]))] = float(
                row["p_11"]
            )
    for mark, entries in data.items():
        ts = sorted({t for t, _ in entries})
        es = sorted({e for _, e in entries})
        grid = [[entries[(t, e)] for t in ts] for e in es]
        fig, ax = plt.subplots(figsize=(6, 4))
        im = ax.imshow(
            grid,
            origin="lower",
            aspect="auto",
            extent=[ts[0], ts[-1], es[0], es[-1]],
        )
        ax.set_xlabel("t")
        ax.set_ylabel("elapsed")
        ax.set_title(f"p_11, mark {mark}")
        fig.colorbar(im, ax=ax)
        fig.tight_layout()
        base = name.replace(".csv", "")
        fig.savefig(os.path.join(here, f"{base}_{mark}.png"), dpi=150)


if __name__ == "__main__":
    plot_costs()
    plot_field("p_field_direct.csv")
    plot_field("p_field_picard.csv")
    print("plots written to", here)
)PY";

class Runner {
  public:
    Runner(const ExperimentConfig& cfg, const RunOptions& opts)
        : cfg_(cfg), opts_(opts),
          root_seed_(opts.seed_override.value_or(cfg.mc.root_seed)),
          out_dir_(opts.output_dir_override.empty() ? cfg.output_dir
                                                    : opts.output_dir_override) {}

    RunOutcome run() {
        fs::create_directories(out_dir_);
        solve();
        write_fields();
        int idx = 0;
        for (const auto& exp : cfg_.experiments) {
            run_experiment(exp, derived_seed(root_seed_, 1000 + idx));
            ++idx;
        }
        if (!cfg_.experiments.empty()) {
            write_results();
            write_file("plots.py", kPlotScript);
        }
        write_manifest();

        RunOutcome outcome;
        outcome.all_passed = all_passed_;
        outcome.n_experiments = static_cast<int>(cfg_.experiments.size());
        outcome.output_dir = out_dir_.string();
        outcome.output_files = files_;
        return outcome;
    }

  private:
    void solve() {
        const std::string& backend = cfg_.solver.backend;
        if (backend == "direct" || backend == "both")
            direct_.emplace(
                solve_riccati_direct(cfg_.coeffs, cfg_.law, *cfg_.grid));
        if (backend == "picard" || backend == "both")
            picard_.emplace(solve_riccati_picard(cfg_.coeffs, cfg_.law, *cfg_.grid,
                                                 cfg_.solver.tol,
                                                 cfg_.solver.max_iter));
        primary_ = direct_ ? &*direct_ : &*picard_;
    }

    void write_fields() {
        if (direct_) {
            std::ofstream out(out_dir_ / "p_field_direct.csv");
            write_field_csv(direct_->P, cfg_.law.marks, out);
            files_.push_back("p_field_direct.csv");
        }
        if (picard_) {
            {
                std::ofstream out(out_dir_ / "p_field_picard.csv");
                write_field_csv(picard_->P, cfg_.law.marks, out);
                files_.push_back("p_field_picard.csv");
            }
            std::ofstream diag(out_dir_ / "picard_diagnostics.csv");
            diag << "window,t_left,t_right,iteration,distance,contraction_ratio,"
                    "max_norm\n";
            for (const auto& w : picard_->diagnostics)
                for (std::size_t l = 0; l < w.distances.size(); ++l) {
                    diag << w.index << ',' << fmt_num(w.t_left) << ','
                         << fmt_num(w.t_right) << ',' << (l + 1) << ','
                         << fmt_num(w.distances[l]) << ','
                         << (l > 0 ? fmt_num(w.contraction_ratios[l - 1]) : "")
                         << ',' << fmt_num(w.max_norm) << "\n";
                }
            files_.push_back("picard_diagnostics.csv");
        }
    }

    void add_row(ResultRow row) {
        if (!row.pass) all_passed_ = false;
        rows_.push_back(std::move(row));
    }

    // First-order discretization allowance added to Monte-Carlo pass rules;
    // on noise-free instances the SE is zero while the O(dt) bias remains.
    double scheme_floor(double dt_sim, double scale) const {
        return 5.0 * (cfg_.grid->step() + dt_sim) * std::max(1.0, std::abs(scale));
    }

    void run_experiment(const ExperimentSpec& exp, std::uint64_t seed) {
        const json& p = exp.params;
        const int n_paths =
            p.contains("n_paths") ? p.at("n_paths").get<int>() : cfg_.mc.n_paths;
        const double dt_sim =
            p.contains("dt_sim") ? p.at("dt_sim").get<double>() : cfg_.mc.dt_sim;
        const double t0 = p.contains("t0") ? p.at("t0").get<double>() : 0.0;
        const double horizon = cfg_.grid->horizon();
        const auto [e0, i0] = elapsed_and_mark(JumpSequence{}, cfg_.law, t0);

        if (exp.kind == "value_check") {
            const Vector x = vector_param(p, "x", cfg_.coeffs.n);
            const double val = value(*primary_, t0, e0, i0, x);
            add_row({exp.id, exp.kind, "value_at_start", val, 0, 0, 0, true});
            const CostEstimate cost = estimate_cost(
                cfg_.coeffs, cfg_.law, ControlSpec::feedback(primary_->P), t0, x,
                n_paths, dt_sim, horizon, seed, opts_.threads);
            add_row({exp.id, exp.kind, "cost:feedback", cost.mean, cost.std_error,
                     0, 0, true});
            const double diff = std::abs(cost.mean - val);
            const double tol = 3.0 * cost.std_error + scheme_floor(dt_sim, val);
            add_row({exp.id, exp.kind, "value_vs_cost", diff, cost.std_error, 0.0,
                     tol, diff <= tol});
            if (direct_ && picard_) {
                const double dist = field_distance(direct_->P, picard_->P);
                const double scale = std::max(
                    1.0, gronwall_constant(cfg_.coeffs.bounds, cfg_.coeffs.d,
                                           horizon) *
                             (cfg_.coeffs.bounds.M_G +
                              horizon * cfg_.coeffs.bounds.M_S));
                const double tol = std::max(10.0 * cfg_.solver.tol,
                                            5.0 * cfg_.grid->step() * scale);
                add_row({exp.id, exp.kind, "backend_distance", dist, 0, 0, tol,
                         dist <= tol});
            }
        } else if (exp.kind == "fundamental_relation") {
            const Vector x = vector_param(p, "x", cfg_.coeffs.n);
            const ControlSpec control =
                build_control(p.at("control"), primary_, cfg_.coeffs.k);
            const auto [e0v, i0v] = elapsed_and_mark(JumpSequence{}, cfg_.law, t0);
            const double val = value(*primary_, t0, e0v, i0v, x);
            const ResidualEstimate res = fundamental_relation_residual(
                *primary_, cfg_.coeffs, cfg_.law, t0, x, control, n_paths, dt_sim,
                horizon, seed, opts_.threads);
            const double tol = 3.0 * res.std_error + scheme_floor(dt_sim, val);
            add_row({exp.id, exp.kind, "residual", res.residual, res.std_error, 0.0,
                     tol, std::abs(res.residual) <= tol});
        } else if (exp.kind == "optimality") {
            const Vector x = vector_param(p, "x", cfg_.coeffs.n);
            std::vector<std::pair<std::string, ControlSpec>> alts;
            if (p.contains("perturbations")) {
                int pi = 0;
                for (const auto& alt : p.at("perturbations")) {
                    const std::string label =
                        alt.contains("label") ? alt.at("label").get<std::string>()
                                              : "alt_" + std::to_string(pi);
                    alts.emplace_back(
                        label, build_control(alt.at("control"), primary_,
                                             cfg_.coeffs.k));
                    ++pi;
                }
            }
            const OptimalityReport report = optimality_experiment(
                cfg_.coeffs, cfg_.law, *primary_, t0, x, alts, n_paths, dt_sim,
                horizon, seed, opts_.threads);
            add_row({exp.id, exp.kind, "cost:feedback", report.feedback_cost.mean,
                     report.feedback_cost.std_error, report.value_at_start,
                     3.0 * report.feedback_cost.std_error,
                     report.value_check_pass});
            for (const auto& row : report.rows)
                add_row({exp.id, exp.kind, "cost:" + row.label, row.cost.mean,
                         row.cost.std_error, report.feedback_cost.mean,
                         3.0 * row.excess_se, row.dominated});
        } else if (exp.kind == "compensator") {
            const double comp_horizon =
                p.contains("horizon") ? p.at("horizon").get<double>() : horizon;
            PredictableFn test_fn;
            if (p.contains("test_fn") && p.at("test_fn").is_object()) {
                const auto name =
                    p.at("test_fn").at("indicator_mark").get<std::string>();
                int target = 0;
                for (int i = 0; i < cfg_.law.mark_count(); ++i)
                    if (cfg_.law.marks[i] == name) target = i;
                test_fn = [target](double, double, int, int j) {
                    return j == target ? 1.0 : 0.0;
                };
            } else {
                test_fn = [](double, double, int, int) { return 1.0; };
            }
            const CompensatorCheckResult res =
                compensator_check(cfg_.law, comp_horizon, test_fn, n_paths, seed,
                                  128, opts_.threads);
            add_row({exp.id, exp.kind, "lhs", res.lhs, res.se_lhs, 0, 0, true});
            add_row({exp.id, exp.kind, "rhs", res.rhs, res.se_rhs, 0, 0, true});
            const double diff = std::abs(res.lhs - res.rhs);
            add_row({exp.id, exp.kind, "identity_gap", diff, res.se_diff, 0.0,
                     3.0 * res.se_diff, diff <= 3.0 * res.se_diff + 1e-12});
        } else if (exp.kind == "moment") {
            const Vector x = vector_param(p, "x", cfg_.coeffs.n);
            const ControlSpec control =
                build_control(p.at("control"), primary_, cfg_.coeffs.k);
            const MomentCheckResult res =
                moment_check(cfg_.coeffs, cfg_.law, control, t0, x, n_paths, dt_sim,
                             horizon, seed, opts_.threads);
            add_row({exp.id, exp.kind, "sup_moment", res.empirical, 0, res.bound,
                     res.bound, res.pass});
        } else if (exp.kind == "convergence") {
            Vector x = Vector::Zero(cfg_.coeffs.n);
            if (p.contains("x"))
                x = vector_param(p, "x", cfg_.coeffs.n);
            else
                x(0) = 1.0;
            double vals[3];
            for (int level = 0; level < 3; ++level) {
                const Grid g(cfg_.grid->horizon(),
                             cfg_.grid->n_steps() * (1 << level),
                             cfg_.grid->e_max());
                const RiccatiSolution s =
                    solve_riccati_direct(cfg_.coeffs, cfg_.law, g);
                vals[level] = value(s, t0, e0, i0, x);
            }
            const double num = std::abs(vals[0] - vals[1]);
            const double den = std::abs(vals[1] - vals[2]);
            const double ratio = den > 0.0 ? num / den : 0.0;
            add_row({exp.id, exp.kind, "refinement_ratio", ratio, 0, 2.0, 0.4,
                     den > 0.0 && ratio >= 1.6 && ratio <= 2.4});
        } else {
            throw std::runtime_error("unknown experiment kind: " + exp.kind);
        }
    }

    void write_results() {
        std::ofstream out(out_dir_ / "results.csv");
        out << "id,kind,label,value,std_error,reference,tolerance,pass\n";
        for (const auto& r : rows_)
            out << r.id << ',' << r.kind << ',' << r.label << ','
                << fmt_num(r.value) << ',' << fmt_num(r.std_error) << ','
                << fmt_num(r.reference) << ',' << fmt_num(r.tolerance) << ','
                << (r.pass ? "true" : "false") << "\n";
        files_.push_back("results.csv");
    }

    void write_file(const std::string& name, const std::string& content) {
        std::ofstream out(out_dir_ / name);
        out << content;
        files_.push_back(name);
    }

    void write_manifest() {
        json manifest;
        manifest["artifact"] = "lqswitch";
        manifest["version"] = kVersion;
        manifest["root_seed"] = root_seed_;
        if (opts_.seed_override)
            manifest["seed_override"] = *opts_.seed_override;
        manifest["config"] = cfg_.raw;
        json outputs = json::array();
        for (const auto& f : files_) {
            json entry;
            entry["file"] = f;
            entry["fnv1a64"] = hex64(fnv1a64_file(out_dir_ / f));
            outputs.push_back(entry);
        }
        manifest["outputs"] = outputs;
        std::ofstream out(out_dir_ / "manifest.json");
        out << manifest.dump(2) << "\n";
        files_.push_back("manifest.json");
    }

    const ExperimentConfig& cfg_;
    const RunOptions& opts_;
    std::uint64_t root_seed_;
    fs::path out_dir_;
    std::optional<RiccatiSolution> direct_;
    std::optional<RiccatiSolution> picard_;
    const RiccatiSolution* primary_ = nullptr;
    std::vector<ResultRow> rows_;
    std::vector<std::string> files_;
    bool all_passed_ = true;
};

} // namespace

RunOutcome run_experiments(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (!cfg.grid)
        throw std::invalid_argument("run_experiments: config not fully built");
    Runner runner(cfg, opts);
    return runner.run();
}

} // namespace lqswitch
