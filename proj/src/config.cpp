#include "lqswitch/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lqswitch {

namespace {

using nlohmann::json;

const std::set<std::string> kHazardFamilies = {"constant", "markov",
                                               "linear_in_elapsed", "weibull",
                                               "table"};
const std::set<std::string> kKernelTypes = {"uniform_other", "matrix", "table"};
const std::set<std::string> kBackends = {"direct", "picard", "both"};
const std::set<std::string> kExperimentKinds = {
    "value_check", "fundamental_relation", "optimality",
    "compensator", "moment",                "convergence"};
const std::set<std::string> kMatrixKinds = {"zero", "constant", "per_mark"};
const std::set<std::string> kControlTypes = {"zero", "feedback",
                                             "feedback_plus_const",
                                             "open_loop_const"};

bool is_number_array(const json& j) {
    if (!j.is_array()) return false;
    for (const auto& v : j)
        if (!v.is_number()) return false;
    return true;
}

Matrix parse_matrix(const json& row_major, int rows, int cols) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            m(r, c) = row_major.at(r * cols + c).get<double>();
    return m;
}

// ---------------------------------------------------------------------------
// validation helpers

class Validator {
  public:
    explicit Validator(std::vector<Violation>& out) : out_(out) {}

    void add(const std::string& path, const std::string& message) {
        out_.push_back({path, message});
    }

    /// Returns nullptr (and records a violation when required) if missing.
    const json* field(const json& obj, const std::string& parent,
                      const std::string& name, bool required = true) {
        if (!obj.is_object() || !obj.contains(name)) {
            if (required) add(join(parent, name), "required field missing");
            return nullptr;
        }
        return &obj.at(name);
    }

    static std::string join(const std::string& parent, const std::string& name) {
        return parent.empty() ? name : parent + "." + name;
    }

  private:
    std::vector<Violation>& out_;
};

// Validates one coefficient matrix spec and returns the per-mark matrices
// (empty on failure). `rows x cols` is the required shape.
std::vector<Matrix> check_matrix_spec(Validator& v, const json& spec,
                                      const std::string& path, int rows, int cols,
                                      int n_marks) {
    std::vector<Matrix> out;
    if (!spec.is_object() || !spec.contains("kind") ||
        !spec.at("kind").is_string() ||
        kMatrixKinds.count(spec.at("kind").get<std::string>()) == 0) {
        v.add(path, "kind must be one of zero|constant|per_mark");
        return out;
    }
    const std::string kind = spec.at("kind").get<std::string>();
    const int entries = rows * cols;
    if (kind == "zero") {
        out.assign(n_marks, Matrix::Zero(rows, cols));
        return out;
    }
    if (kind == "constant") {
        const json* val = v.field(spec, path, "value");
        if (!val) return out;
        if (!is_number_array(*val) || static_cast<int>(val->size()) != entries) {
            v.add(path + ".value",
                  "expected row-major array of " + std::to_string(entries) +
                      " numbers");
            return out;
        }
        out.assign(n_marks, parse_matrix(*val, rows, cols));
        return out;
    }
    const json* vals = v.field(spec, path, "values");
    if (!vals) return out;
    if (!vals->is_array() || static_cast<int>(vals->size()) != n_marks) {
        v.add(path + ".values",
              "expected one row-major array per mark (" + std::to_string(n_marks) +
                  " total)");
        return out;
    }
    for (int i = 0; i < n_marks; ++i) {
        const json& m = vals->at(i);
        if (!is_number_array(m) || static_cast<int>(m.size()) != entries) {
            v.add(path + ".values[" + std::to_string(i) + "]",
                  "expected row-major array of " + std::to_string(entries) +
                      " numbers");
            return {};
        }
        out.push_back(parse_matrix(m, rows, cols));
    }
    return out;
}

void check_finite(Validator& v, const std::vector<Matrix>& ms,
                  const std::string& path) {
    for (const auto& m : ms)
        if (!is_finite(m)) {
            v.add(path, "matrix entries must be finite");
            return;
        }
}

struct ParsedSwitching {
    std::vector<std::string> marks;
    int initial_mark = 0;
    double initial_elapsed = 0.0;
    double hazard_bound = 0.0;
    bool ok = false;
};

double number_or(const json& obj, const std::string& name, double fallback) {
    if (obj.is_object() && obj.contains(name) && obj.at(name).is_number())
        return obj.at(name).get<double>();
    return fallback;
}

ParsedSwitching check_switching(Validator& v, const json& sw) {
    ParsedSwitching out;
    const std::string base = "switching";
    if (!sw.is_object()) {
        v.add(base, "must be an object");
        return out;
    }

    const json* marks = v.field(sw, base, "marks");
    if (marks) {
        if (!marks->is_array() || marks->empty()) {
            v.add(base + ".marks", "must be a nonempty array of names");
        } else {
            for (const auto& m : *marks) {
                if (!m.is_string()) {
                    v.add(base + ".marks", "mark names must be strings");
                    break;
                }
                out.marks.push_back(m.get<std::string>());
            }
        }
    }
    const int n_marks = static_cast<int>(out.marks.size());
    if (n_marks == 0) return out;

    const json* init = v.field(sw, base, "initial_mark");
    if (init) {
        if (!init->is_string()) {
            v.add(base + ".initial_mark", "must be a mark name");
        } else {
            const auto it = std::find(out.marks.begin(), out.marks.end(),
                                      init->get<std::string>());
            if (it == out.marks.end())
                v.add(base + ".initial_mark", "not a member of switching.marks");
            else
                out.initial_mark = static_cast<int>(it - out.marks.begin());
        }
    }

    out.initial_elapsed = number_or(sw, "initial_elapsed", 0.0);
    if (!(out.initial_elapsed >= 0.0) || !std::isfinite(out.initial_elapsed))
        v.add(base + ".initial_elapsed", "must be a finite number >= 0");

    // hazard
    double max_rate = 0.0;
    bool rate_known = false;
    const json* hz = v.field(sw, base, "hazard");
    std::string family;
    if (hz) {
        if (!hz->is_object() || !hz->contains("family") ||
            !hz->at("family").is_string() ||
            kHazardFamilies.count(hz->at("family").get<std::string>()) == 0) {
            v.add(base + ".hazard.family",
                  "must be one of constant|markov|linear_in_elapsed|weibull|table");
        } else {
            family = hz->at("family").get<std::string>();
            auto check_rate_array = [&](const char* name) -> const json* {
                const json* arr = v.field(*hz, base + ".hazard", name);
                if (!arr) return nullptr;
                if (!is_number_array(*arr) ||
                    static_cast<int>(arr->size()) != n_marks) {
                    v.add(base + ".hazard." + name,
                          "expected one number per mark");
                    return nullptr;
                }
                for (const auto& r : *arr)
                    if (!(r.get<double>() >= 0.0) ||
                        !std::isfinite(r.get<double>())) {
                        v.add(base + ".hazard." + name,
                              "entries must be finite and >= 0");
                        return nullptr;
                    }
                return arr;
            };
            if (family == "constant" || family == "markov") {
                if (const json* r = check_rate_array("rate")) {
                    rate_known = true;
                    for (const auto& x : *r)
                        max_rate = std::max(max_rate, x.get<double>());
                }
            } else if (family == "linear_in_elapsed") {
                check_rate_array("slope");
            } else if (family == "weibull") {
                check_rate_array("rate");
                check_rate_array("shape");
            } else if (family == "table") {
                const json* breaks = v.field(*hz, base + ".hazard", "e_breaks");
                const json* values = v.field(*hz, base + ".hazard", "values");
                int n_bins = 0;
                if (breaks) {
                    if (!is_number_array(*breaks) || breaks->empty())
                        v.add(base + ".hazard.e_breaks",
                              "must be a nonempty ascending number array");
                    else {
                        n_bins = static_cast<int>(breaks->size());
                        for (std::size_t b = 1; b < breaks->size(); ++b)
                            if (!(breaks->at(b).get<double>() >
                                  breaks->at(b - 1).get<double>()))
                                v.add(base + ".hazard.e_breaks",
                                      "must be strictly increasing");
                    }
                }
                if (values) {
                    if (!values->is_array() ||
                        static_cast<int>(values->size()) != n_bins) {
                        v.add(base + ".hazard.values",
                              "expected one row per e_break");
                    } else {
                        rate_known = true;
                        for (const auto& row : *values) {
                            if (!is_number_array(row) ||
                                static_cast<int>(row.size()) != n_marks) {
                                v.add(base + ".hazard.values",
                                      "each row needs one rate per mark");
                                rate_known = false;
                                break;
                            }
                            for (const auto& x : row) {
                                if (!(x.get<double>() >= 0.0)) {
                                    v.add(base + ".hazard.values",
                                          "rates must be >= 0");
                                    rate_known = false;
                                    break;
                                }
                                max_rate = std::max(max_rate, x.get<double>());
                            }
                        }
                    }
                }
            }
        }
    }

    // hazard_bound: the thinning envelope. Required for the capped families,
    // defaulted to the max tabulated rate otherwise.
    if (sw.contains("hazard_bound")) {
        if (!sw.at("hazard_bound").is_number() ||
            !(sw.at("hazard_bound").get<double>() >= 0.0) ||
            !std::isfinite(sw.at("hazard_bound").get<double>()))
            v.add(base + ".hazard_bound", "must be a finite number >= 0");
        else {
            out.hazard_bound = sw.at("hazard_bound").get<double>();
            if (rate_known && out.hazard_bound < max_rate * (1.0 - 1e-12))
                v.add(base + ".hazard_bound",
                      "smaller than the largest configured rate");
        }
    } else if (rate_known) {
        out.hazard_bound = max_rate;
    } else if (!family.empty()) {
        v.add(base + ".hazard_bound",
              "required for the " + family + " family (it caps the hazard)");
    }

    // kernel
    const json* kr = v.field(sw, base, "kernel");
    if (kr) {
        if (!kr->is_object() || !kr->contains("type") ||
            !kr->at("type").is_string() ||
            kKernelTypes.count(kr->at("type").get<std::string>()) == 0) {
            v.add(base + ".kernel.type",
                  "must be one of uniform_other|matrix|table");
        } else {
            const std::string type = kr->at("type").get<std::string>();
            auto check_rows = [&](const json& rows, const std::string& path) {
                if (!rows.is_array() ||
                    static_cast<int>(rows.size()) != n_marks) {
                    v.add(path, "expected one probability row per mark");
                    return;
                }
                for (int i = 0; i < n_marks; ++i) {
                    const json& row = rows.at(i);
                    if (!is_number_array(row) ||
                        static_cast<int>(row.size()) != n_marks) {
                        v.add(path, "row " + std::to_string(i) +
                                        " needs one probability per mark");
                        return;
                    }
                    double sum = 0.0;
                    for (const auto& x : row) {
                        if (x.get<double>() < -1e-12) {
                            v.add(path, "row " + std::to_string(i) +
                                            " has a negative entry");
                            return;
                        }
                        sum += x.get<double>();
                    }
                    if (std::abs(sum - 1.0) > 1e-12)
                        v.add(path, "row " + std::to_string(i) +
                                        " does not sum to 1 within 1e-12");
                }
            };
            if (type == "matrix") {
                if (const json* rows = v.field(*kr, base + ".kernel", "rows"))
                    check_rows(*rows, base + ".kernel.rows");
            } else if (type == "table") {
                const json* breaks = v.field(*kr, base + ".kernel", "e_breaks");
                const json* mats = v.field(*kr, base + ".kernel", "matrices");
                if (breaks && mats) {
                    if (!mats->is_array() || mats->size() != breaks->size())
                        v.add(base + ".kernel.matrices",
                              "expected one matrix per e_break");
                    else
                        for (std::size_t b = 0; b < mats->size(); ++b)
                            check_rows(mats->at(b), base + ".kernel.matrices[" +
                                                        std::to_string(b) + "]");
                }
            }
        }
    }

    out.ok = true;
    return out;
}

} // namespace

std::vector<Violation> validate_config(const json& j) {
    std::vector<Violation> violations;
    Validator v(violations);

    if (!j.is_object()) {
        v.add("", "config must be a JSON object");
        return violations;
    }

    // switching first: the mark count shapes the model checks
    const ParsedSwitching sw =
        j.contains("switching") ? check_switching(v, j.at("switching"))
                                : (v.add("switching", "required field missing"),
                                   ParsedSwitching{});
    const int n_marks = std::max<int>(1, static_cast<int>(sw.marks.size()));

    // model
    int n = 0, kdim = 0, d = 0;
    double auto_MA = 0, auto_MB = 0, auto_MC = 0, auto_MS = 0, auto_MG = 0;
    std::vector<Matrix> s_mats, g_mats;
    if (const json* model = v.field(j, "", "model")) {
        auto dim_field = [&](const char* name, int lo) {
            const json* f = v.field(*model, "model", name);
            if (!f) return 0;
            if (!f->is_number_integer() || f->get<int>() < lo) {
                v.add(std::string("model.") + name,
                      "must be an integer >= " + std::to_string(lo));
                return 0;
            }
            return f->get<int>();
        };
        n = dim_field("n", 1);
        kdim = dim_field("k", 1);
        d = model->contains("d") ? dim_field("d", 0) : 0;

        if (n >= 1 && kdim >= 1) {
            auto norm_of = [](const std::vector<Matrix>& ms) {
                double worst = 0.0;
                for (const auto& m : ms) worst = std::max(worst, operator_norm(m));
                return worst;
            };
            if (const json* a = v.field(*model, "model", "A")) {
                auto ms = check_matrix_spec(v, *a, "model.A", n, n, n_marks);
                check_finite(v, ms, "model.A");
                auto_MA = norm_of(ms);
            }
            if (const json* b = v.field(*model, "model", "B")) {
                auto ms = check_matrix_spec(v, *b, "model.B", n, kdim, n_marks);
                check_finite(v, ms, "model.B");
                auto_MB = norm_of(ms);
            }
            if (d > 0) {
                if (const json* c = v.field(*model, "model", "C")) {
                    if (!c->is_array() || static_cast<int>(c->size()) != d)
                        v.add("model.C", "expected an array of d matrix specs");
                    else
                        for (int jj = 0; jj < d; ++jj) {
                            auto ms = check_matrix_spec(
                                v, c->at(jj), "model.C[" + std::to_string(jj) + "]",
                                n, n, n_marks);
                            check_finite(v, ms,
                                         "model.C[" + std::to_string(jj) + "]");
                            auto_MC = std::max(auto_MC, norm_of(ms));
                        }
                }
            }
            if (const json* s = v.field(*model, "model", "S")) {
                s_mats = check_matrix_spec(v, *s, "model.S", n, n, n_marks);
                check_finite(v, s_mats, "model.S");
                auto_MS = norm_of(s_mats);
                for (std::size_t i = 0; i < s_mats.size(); ++i) {
                    if (asymmetry(s_mats[i]) > 1e-10)
                        v.add("model.S", "matrix " + std::to_string(i) +
                                             " is not symmetric");
                    else if (min_eigenvalue(symmetrized(s_mats[i])) < -1e-10)
                        v.add("model.S",
                              "matrix " + std::to_string(i) +
                                  " is not positive semidefinite (min eigenvalue " +
                                  std::to_string(
                                      min_eigenvalue(symmetrized(s_mats[i]))) +
                                  ")");
                }
            }
            if (const json* g = v.field(*model, "model", "G")) {
                g_mats = check_matrix_spec(v, *g, "model.G", n, n, n_marks);
                check_finite(v, g_mats, "model.G");
                auto_MG = norm_of(g_mats);
                for (std::size_t i = 0; i < g_mats.size(); ++i) {
                    if (asymmetry(g_mats[i]) > 1e-10)
                        v.add("model.G", "matrix " + std::to_string(i) +
                                             " is not symmetric");
                    else if (min_eigenvalue(symmetrized(g_mats[i])) < -1e-10)
                        v.add("model.G",
                              "matrix " + std::to_string(i) +
                                  " is not positive semidefinite (min eigenvalue " +
                                  std::to_string(
                                      min_eigenvalue(symmetrized(g_mats[i]))) +
                                  ")");
                }
            }
        }
        if (model->contains("bounds")) {
            const json& b = model->at("bounds");
            if (!b.is_object()) {
                v.add("model.bounds", "must be an object");
            } else {
                for (const auto& name :
                     {"M_A", "M_B", "M_C", "M_G", "M_S"}) {
                    if (b.contains(name) &&
                        (!b.at(name).is_number() ||
                         b.at(name).get<double>() < 0.0))
                        v.add(std::string("model.bounds.") + name,
                              "must be a number >= 0");
                }
                auto declared_covers = [&](const char* name, double actual) {
                    if (b.contains(name) && b.at(name).is_number() &&
                        b.at(name).get<double>() >= 0.0 &&
                        b.at(name).get<double>() < actual * (1.0 - 1e-9) - 1e-12)
                        v.add(std::string("model.bounds.") + name,
                              "smaller than the norm of the configured matrices");
                };
                declared_covers("M_A", auto_MA);
                declared_covers("M_B", auto_MB);
                declared_covers("M_C", auto_MC);
                declared_covers("M_S", auto_MS);
                declared_covers("M_G", auto_MG);
            }
        }
    }

    // grid
    double horizon = 0.0, dt = 0.0;
    if (const json* grid = v.field(j, "", "grid")) {
        const json* hf = v.field(*grid, "grid", "horizon");
        if (hf && (!hf->is_number() || !(hf->get<double>() > 0.0)))
            v.add("grid.horizon", "must be a number > 0");
        else if (hf)
            horizon = hf->get<double>();
        const json* ns = v.field(*grid, "grid", "n_steps");
        if (ns && (!ns->is_number_integer() || ns->get<int>() < 2))
            v.add("grid.n_steps", "must be an integer >= 2");
        else if (ns && horizon > 0.0)
            dt = horizon / ns->get<int>();
        if (grid->contains("e_max") && !grid->at("e_max").is_null()) {
            if (!grid->at("e_max").is_number())
                v.add("grid.e_max", "must be a number");
            else if (horizon > 0.0 &&
                     grid->at("e_max").get<double>() <
                         horizon + sw.initial_elapsed - 1e-12)
                v.add("grid.e_max",
                      "must cover horizon + initial_elapsed (the largest "
                      "elapsed time a path can reach)");
        }
        // explicit-scheme stability ties the grid to the model and hazard
        if (dt > 0.0) {
            const double stab =
                dt * (2.0 * auto_MA + d * auto_MC * auto_MC + 2.0 * sw.hazard_bound);
            if (stab >= 1.0)
                v.add("grid.n_steps",
                      "too coarse: dt*(2*M_A + d*M_C^2 + 2*hazard_bound) = " +
                          std::to_string(stab) + " must be < 1");
        }
    }

    // solver
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        if (!s.is_object()) {
            v.add("solver", "must be an object");
        } else {
            if (s.contains("backend") &&
                (!s.at("backend").is_string() ||
                 kBackends.count(s.at("backend").get<std::string>()) == 0))
                v.add("solver.backend", "must be direct|picard|both");
            if (s.contains("tol") &&
                (!s.at("tol").is_number() || !(s.at("tol").get<double>() > 0.0)))
                v.add("solver.tol", "must be a number > 0");
            if (s.contains("max_iter") && (!s.at("max_iter").is_number_integer() ||
                                           s.at("max_iter").get<int>() < 1))
                v.add("solver.max_iter", "must be an integer >= 1");
        }
    }

    // monte_carlo
    if (j.contains("monte_carlo")) {
        const json& mc = j.at("monte_carlo");
        if (!mc.is_object()) {
            v.add("monte_carlo", "must be an object");
        } else {
            if (mc.contains("n_paths") && (!mc.at("n_paths").is_number_integer() ||
                                           mc.at("n_paths").get<int>() < 100))
                v.add("monte_carlo.n_paths", "must be an integer >= 100");
            if (mc.contains("dt_sim")) {
                if (!mc.at("dt_sim").is_number() ||
                    !(mc.at("dt_sim").get<double>() > 0.0))
                    v.add("monte_carlo.dt_sim", "must be a number > 0");
                else if (dt > 0.0 &&
                         mc.at("dt_sim").get<double>() > dt * (1.0 + 1e-12))
                    v.add("monte_carlo.dt_sim",
                          "must not exceed the field grid step");
            }
        }
    }

    // experiments
    if (j.contains("experiments")) {
        const json& exps = j.at("experiments");
        if (!exps.is_array()) {
            v.add("experiments", "must be an array");
        } else {
            for (std::size_t idx = 0; idx < exps.size(); ++idx) {
                const std::string base = "experiments[" + std::to_string(idx) + "]";
                const json& e = exps.at(idx);
                if (!e.is_object() || !e.contains("kind") ||
                    !e.at("kind").is_string() ||
                    kExperimentKinds.count(e.at("kind").get<std::string>()) == 0) {
                    v.add(base + ".kind",
                          "must be one of value_check|fundamental_relation|"
                          "optimality|compensator|moment|convergence");
                    continue;
                }
                const std::string kind = e.at("kind").get<std::string>();
                auto check_x = [&]() {
                    if (!e.contains("x") || !is_number_array(e.at("x")) ||
                        static_cast<int>(e.at("x").size()) != n)
                        v.add(base + ".x",
                              "required state vector of length model.n");
                };
                auto check_control = [&](const json& c, const std::string& path) {
                    if (!c.is_object() || !c.contains("type") ||
                        !c.at("type").is_string() ||
                        kControlTypes.count(c.at("type").get<std::string>()) == 0) {
                        v.add(path + ".type",
                              "must be zero|feedback|feedback_plus_const|"
                              "open_loop_const");
                        return;
                    }
                    const std::string type = c.at("type").get<std::string>();
                    if (type == "feedback_plus_const" || type == "open_loop_const") {
                        const char* fname =
                            type == "feedback_plus_const" ? "offset" : "u";
                        if (!c.contains(fname) || !is_number_array(c.at(fname)) ||
                            static_cast<int>(c.at(fname).size()) != kdim)
                            v.add(path + "." + fname,
                                  "required vector of length model.k");
                    }
                };
                if (kind == "value_check" || kind == "moment" ||
                    kind == "optimality" || kind == "fundamental_relation")
                    check_x();
                if (kind == "fundamental_relation" || kind == "moment") {
                    if (e.contains("control"))
                        check_control(e.at("control"), base + ".control");
                    else
                        v.add(base + ".control", "required field missing");
                }
                if (kind == "optimality" && e.contains("perturbations")) {
                    const json& ps = e.at("perturbations");
                    if (!ps.is_array())
                        v.add(base + ".perturbations", "must be an array");
                    else
                        for (std::size_t pi = 0; pi < ps.size(); ++pi) {
                            const json& p = ps.at(pi);
                            const std::string pbase = base + ".perturbations[" +
                                                      std::to_string(pi) + "]";
                            if (!p.is_object() || !p.contains("control"))
                                v.add(pbase + ".control", "required field missing");
                            else
                                check_control(p.at("control"), pbase + ".control");
                        }
                }
                if (kind == "compensator" && e.contains("test_fn") &&
                    e.at("test_fn").is_object()) {
                    const json& tf = e.at("test_fn");
                    if (tf.contains("indicator_mark") &&
                        (!tf.at("indicator_mark").is_string() ||
                         std::find(sw.marks.begin(), sw.marks.end(),
                                   tf.at("indicator_mark").get<std::string>()) ==
                             sw.marks.end()))
                        v.add(base + ".test_fn.indicator_mark",
                              "not a member of switching.marks");
                }
            }
        }
    }

    if (j.contains("output_dir") &&
        (!j.at("output_dir").is_string() ||
         j.at("output_dir").get<std::string>().empty()))
        v.add("output_dir", "must be a nonempty string");

    return violations;
}

namespace {

// ---------------------------------------------------------------------------
// builders (assume a validated config)

MatrixFn build_matrix_fn(const json& spec, int rows, int cols, int n_marks) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "zero") {
        Matrix z = Matrix::Zero(rows, cols);
        return [z](double, double, int) { return z; };
    }
    std::vector<Matrix> per_mark;
    if (kind == "constant") {
        per_mark.assign(n_marks, parse_matrix(spec.at("value"), rows, cols));
    } else {
        for (int i = 0; i < n_marks; ++i)
            per_mark.push_back(parse_matrix(spec.at("values").at(i), rows, cols));
    }
    return [per_mark](double, double, int i) { return per_mark[i]; };
}

HazardFn build_hazard(const json& hz, double bound) {
    const std::string family = hz.at("family").get<std::string>();
    if (family == "constant" || family == "markov") {
        std::vector<double> rate = hz.at("rate").get<std::vector<double>>();
        return [rate](double, double, int i) { return rate[i]; };
    }
    if (family == "linear_in_elapsed") {
        std::vector<double> slope = hz.at("slope").get<std::vector<double>>();
        return [slope, bound](double, double e, int i) {
            return std::min(slope[i] * e, bound);
        };
    }
    if (family == "weibull") {
        std::vector<double> rate = hz.at("rate").get<std::vector<double>>();
        std::vector<double> shape = hz.at("shape").get<std::vector<double>>();
        return [rate, shape, bound](double, double e, int i) {
            if (e <= 0.0) return shape[i] >= 1.0 ? (shape[i] == 1.0 ? rate[i] : 0.0)
                                                 : bound;
            return std::min(rate[i] * shape[i] * std::pow(e, shape[i] - 1.0), bound);
        };
    }
    // table
    std::vector<double> breaks = hz.at("e_breaks").get<std::vector<double>>();
    std::vector<std::vector<double>> values;
    for (const auto& row : hz.at("values"))
        values.push_back(row.get<std::vector<double>>());
    return [breaks, values](double, double e, int i) {
        auto it = std::upper_bound(breaks.begin(), breaks.end(), e);
        const std::size_t bin =
            it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin()) - 1;
        return values[bin][i];
    };
}

KernelFn build_kernel(const json& kr, int n_marks) {
    const std::string type = kr.at("type").get<std::string>();
    if (type == "uniform_other") {
        return [n_marks](double, double, int i) {
            std::vector<double> row(n_marks, 0.0);
            if (n_marks == 1) {
                row[0] = 1.0;
            } else {
                for (int j = 0; j < n_marks; ++j)
                    if (j != i) row[j] = 1.0 / (n_marks - 1);
            }
            return row;
        };
    }
    if (type == "matrix") {
        std::vector<std::vector<double>> rows;
        for (const auto& r : kr.at("rows")) rows.push_back(r.get<std::vector<double>>());
        return [rows](double, double, int i) { return rows[i]; };
    }
    std::vector<double> breaks = kr.at("e_breaks").get<std::vector<double>>();
    std::vector<std::vector<std::vector<double>>> mats;
    for (const auto& m : kr.at("matrices")) {
        std::vector<std::vector<double>> rows;
        for (const auto& r : m) rows.push_back(r.get<std::vector<double>>());
        mats.push_back(std::move(rows));
    }
    return [breaks, mats](double, double e, int i) {
        auto it = std::upper_bound(breaks.begin(), breaks.end(), e);
        const std::size_t bin =
            it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin()) - 1;
        return mats[bin][i];
    };
}

} // namespace

ExperimentConfig load_config(const json& j) {
    const auto violations = validate_config(j);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "invalid config:";
        for (const auto& viol : violations)
            msg << "\n  " << viol.path << ": " << viol.message;
        throw std::invalid_argument(msg.str());
    }

    ExperimentConfig cfg;
    cfg.raw = j;

    const json& sw = j.at("switching");
    for (const auto& m : sw.at("marks"))
        cfg.law.marks.push_back(m.get<std::string>());
    const int n_marks = cfg.law.mark_count();
    {
        const auto name = sw.at("initial_mark").get<std::string>();
        cfg.law.initial_mark = static_cast<int>(
            std::find(cfg.law.marks.begin(), cfg.law.marks.end(), name) -
            cfg.law.marks.begin());
    }
    cfg.law.initial_elapsed = number_or(sw, "initial_elapsed", 0.0);
    double max_rate = 0.0;
    {
        const json& hz = sw.at("hazard");
        const std::string family = hz.at("family").get<std::string>();
        if ((family == "constant" || family == "markov") && hz.contains("rate"))
            for (const auto& r : hz.at("rate"))
                max_rate = std::max(max_rate, r.get<double>());
        if (family == "table" && hz.contains("values"))
            for (const auto& row : hz.at("values"))
                for (const auto& r : row) max_rate = std::max(max_rate, r.get<double>());
    }
    cfg.law.hazard_bound =
        sw.contains("hazard_bound") ? sw.at("hazard_bound").get<double>() : max_rate;
    cfg.law.hazard = build_hazard(sw.at("hazard"), cfg.law.hazard_bound);
    cfg.law.kernel = build_kernel(sw.at("kernel"), n_marks);

    const json& model = j.at("model");
    cfg.coeffs.n = model.at("n").get<int>();
    cfg.coeffs.k = model.at("k").get<int>();
    cfg.coeffs.d = model.contains("d") ? model.at("d").get<int>() : 0;
    cfg.coeffs.A = build_matrix_fn(model.at("A"), cfg.coeffs.n, cfg.coeffs.n, n_marks);
    cfg.coeffs.B = build_matrix_fn(model.at("B"), cfg.coeffs.n, cfg.coeffs.k, n_marks);
    for (int jj = 0; jj < cfg.coeffs.d; ++jj)
        cfg.coeffs.C.push_back(build_matrix_fn(model.at("C").at(jj), cfg.coeffs.n,
                                               cfg.coeffs.n, n_marks));
    cfg.coeffs.S = build_matrix_fn(model.at("S"), cfg.coeffs.n, cfg.coeffs.n, n_marks);
    MatrixFn g_fn =
        build_matrix_fn(model.at("G"), cfg.coeffs.n, cfg.coeffs.n, n_marks);
    cfg.coeffs.G = [g_fn](double e, int i) { return g_fn(0.0, e, i); };
    cfg.coeffs.stationary = true;

    // bounds: auto-computed from the matrices, overridden where declared
    auto norm_over_marks = [&](const MatrixFn& fn) {
        double worst = 0.0;
        for (int i = 0; i < n_marks; ++i)
            worst = std::max(worst, operator_norm(fn(0.0, 0.0, i)));
        return worst;
    };
    cfg.coeffs.bounds.M_A = norm_over_marks(cfg.coeffs.A);
    cfg.coeffs.bounds.M_B = norm_over_marks(cfg.coeffs.B);
    for (const auto& c : cfg.coeffs.C)
        cfg.coeffs.bounds.M_C = std::max(cfg.coeffs.bounds.M_C, norm_over_marks(c));
    cfg.coeffs.bounds.M_S = norm_over_marks(cfg.coeffs.S);
    cfg.coeffs.bounds.M_G = norm_over_marks(g_fn);
    if (model.contains("bounds")) {
        const json& b = model.at("bounds");
        auto override_bound = [&](const char* name, double& slot) {
            if (b.contains(name)) slot = b.at(name).get<double>();
        };
        override_bound("M_A", cfg.coeffs.bounds.M_A);
        override_bound("M_B", cfg.coeffs.bounds.M_B);
        override_bound("M_C", cfg.coeffs.bounds.M_C);
        override_bound("M_S", cfg.coeffs.bounds.M_S);
        override_bound("M_G", cfg.coeffs.bounds.M_G);
    }

    const json& grid = j.at("grid");
    const double horizon = grid.at("horizon").get<double>();
    const double e_max = grid.contains("e_max") && !grid.at("e_max").is_null()
                             ? grid.at("e_max").get<double>()
                             : horizon + cfg.law.initial_elapsed;
    cfg.grid.emplace(horizon, grid.at("n_steps").get<int>(), e_max);

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        if (s.contains("backend")) cfg.solver.backend = s.at("backend").get<std::string>();
        if (s.contains("tol")) cfg.solver.tol = s.at("tol").get<double>();
        if (s.contains("max_iter")) cfg.solver.max_iter = s.at("max_iter").get<int>();
    }
    if (j.contains("monte_carlo")) {
        const json& mc = j.at("monte_carlo");
        if (mc.contains("n_paths")) cfg.mc.n_paths = mc.at("n_paths").get<int>();
        if (mc.contains("dt_sim")) cfg.mc.dt_sim = mc.at("dt_sim").get<double>();
        if (mc.contains("root_seed"))
            cfg.mc.root_seed = mc.at("root_seed").get<std::uint64_t>();
    }
    if (j.contains("experiments")) {
        int idx = 0;
        for (const auto& e : j.at("experiments")) {
            ExperimentSpec spec;
            spec.kind = e.at("kind").get<std::string>();
            spec.id = e.contains("id") ? e.at("id").get<std::string>()
                                       : spec.kind + "_" + std::to_string(idx);
            spec.params = e;
            cfg.experiments.push_back(std::move(spec));
            ++idx;
        }
    }
    if (j.contains("output_dir"))
        cfg.output_dir = j.at("output_dir").get<std::string>();
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& ex) {
        throw std::invalid_argument("config is not valid JSON: " +
                                    std::string(ex.what()));
    }
    return load_config(j);
}

} // namespace lqswitch
