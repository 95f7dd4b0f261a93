#include "tabdistill/models/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "tabdistill/numerics/autodiff.hpp"
#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/log.hpp"
#include "tabdistill/numerics/optim.hpp"
#include "tabdistill/numerics/rng.hpp"

namespace tabdistill::models {

namespace {

constexpr ClassifierKind kKinds[] = {ClassifierKind::knn, ClassifierKind::logreg, ClassifierKind::gnb,
                                     ClassifierKind::mlp};

double log_sum_exp(std::span<const double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// --- logistic regression ------------------------------------------------------

// Flat parameter layout: weights (width x k, row-major) then k intercepts;
// k = 1 for two classes (sigmoid), L otherwise (softmax).
struct LogregProblem {
    const Matrix& x;
    std::span<const int> y;
    std::size_t k;
    double inv_c;

    std::size_t size() const { return (x.cols() + 1) * k; }

    Matrix logits(const std::vector<double>& theta) const {
        const std::size_t d = x.cols();
        Matrix z(x.rows(), k);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t c = 0; c < k; ++c) {
                double s = theta[d * k + c];
                for (std::size_t j = 0; j < d; ++j) s += x(i, j) * theta[j * k + c];
                z(i, c) = s;
            }
        return z;
    }

    // Objective Σ_i loss_i + ½‖W‖²/C and its gradient.
    double evaluate(const std::vector<double>& theta, std::vector<double>* grad) const {
        const std::size_t d = x.cols(), n = x.rows();
        const Matrix z = logits(theta);
        Matrix resid(n, k);
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (k == 1) {
                const double zi = z(i, 0), yi = y[i] == 1 ? 1.0 : 0.0;
                // log(1 + e^z) − y·z, evaluated stably
                f += std::max(zi, 0.0) + std::log1p(std::exp(-std::abs(zi))) - yi * zi;
                resid(i, 0) = 1.0 / (1.0 + std::exp(-zi)) - yi;
            } else {
                const double lse = log_sum_exp(z.row(i));
                f += lse - z(i, static_cast<std::size_t>(y[i]));
                for (std::size_t c = 0; c < k; ++c) resid(i, c) = std::exp(z(i, c) - lse);
                resid(i, static_cast<std::size_t>(y[i])) -= 1.0;
            }
        }
        for (std::size_t j = 0; j < d * k; ++j) f += 0.5 * inv_c * theta[j] * theta[j];
        if (grad) {
            grad->assign(size(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < k; ++c) {
                    const double r = resid(i, c);
                    for (std::size_t j = 0; j < d; ++j) (*grad)[j * k + c] += x(i, j) * r;
                    (*grad)[d * k + c] += r;
                }
            for (std::size_t j = 0; j < d * k; ++j) (*grad)[j] += inv_c * theta[j];
        }
        return f;
    }
};

double norm2(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

// Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.
std::vector<double> solve_logreg(const LogregProblem& prob, double tol, std::size_t max_iter, std::size_t& iterations) {
    std::vector<double> theta(prob.size(), 0.0), grad, next(prob.size()), next_grad;
    double f = prob.evaluate(theta, &grad);
    double step = 1.0;
    std::vector<double> prev_theta, prev_grad;
    iterations = 0;
    for (; iterations < max_iter; ++iterations) {
        const double gn = norm2(grad);
        if (gn <= tol) return theta;
        if (iterations == 0) {
            step = 1.0 / std::max(gn, 1.0);
        } else {
            double ss = 0.0, sy = 0.0;
            for (std::size_t j = 0; j < theta.size(); ++j) {
                const double s = theta[j] - prev_theta[j], yv = grad[j] - prev_grad[j];
                ss += s * s;
                sy += s * yv;
            }
            step = sy > 0.0 ? ss / sy : 2.0 * step;
        }
        double fn = 0.0;
        for (int halvings = 0;; ++halvings) {
            for (std::size_t j = 0; j < theta.size(); ++j) next[j] = theta[j] - step * grad[j];
            fn = prob.evaluate(next, nullptr);
            if (fn <= f - 1e-4 * step * gn * gn) break;
            if (halvings == 60) return theta;  // no further decrease representable
            step *= 0.5;
        }
        prev_theta = theta;
        prev_grad = grad;
        theta = next;
        f = prob.evaluate(theta, &grad);
    }
    log_warning("logreg: gradient norm above tolerance after " + std::to_string(max_iter) + " iterations");
    return theta;
}

// --- mlp ----------------------------------------------------------------------

double mean_cross_entropy(const Matrix& logits, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (const double v : row) z += std::exp(v - mx);
        total += std::log(z) + mx - row[static_cast<std::size_t>(y[i])];
    }
    return total / static_cast<double>(logits.rows());
}

ad::Var mlp_logits(ad::Graph& g, const ad::BoundParams& p, const Matrix& x) {
    const ad::Var h = ad::relu(ad::add_bias(ad::matmul(g.constant(x), p["w1"]), p["b1"]));
    return ad::add_bias(ad::matmul(h, p["w2"]), p["b2"]);
}

Matrix mlp_forward(const ParamMap& params, const Matrix& x) {
    ad::Graph g;
    const auto p = g.bind(params);
    return mlp_logits(g, p, x).value();
}

double accuracy(std::span<const int> truth, std::span<const int> pred) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace

const char* to_string(ClassifierKind kind) noexcept {
    switch (kind) {
        case ClassifierKind::knn: return "knn";
        case ClassifierKind::logreg: return "logreg";
        case ClassifierKind::gnb: return "gnb";
        case ClassifierKind::mlp: return "mlp";
    }
    return "?";
}

ClassifierKind parse_classifier_kind(const std::string& text) {
    for (auto k : kKinds)
        if (text == to_string(k)) return k;
    throw ConfigError("unknown classifier '" + text + "'");
}

void ClassifierSpec::validate() const {
    if (knn_k == 0) throw ConfigError("knn: k must be at least 1");
    if (!(logreg_c > 0.0) || !(logreg_tol > 0.0) || logreg_max_iter == 0)
        throw ConfigError("logreg: C, tolerance and iteration cap must be positive");
    if (!(gnb_var_smoothing > 0.0)) throw ConfigError("gnb: var_smoothing must be positive");
    if (mlp_hidden == 0 || mlp_batch_size == 0 || !(mlp_learning_rate > 0.0) || !(mlp_alpha >= 0.0))
        throw ConfigError("mlp: invalid width, batch size, learning rate or alpha");
    if (!(mlp_validation_fraction >= 0.0) || mlp_validation_fraction >= 1.0)
        throw ConfigError("mlp: validation fraction must be in [0, 1)");
    if (mlp_patience == 0) throw ConfigError("mlp: patience must be at least 1");
}

nlohmann::json ClassifierSpec::to_json() const {
    return {{"kind", to_string(kind)},
            {"knn_k", knn_k},
            {"logreg_c", logreg_c},
            {"logreg_tol", logreg_tol},
            {"logreg_max_iter", logreg_max_iter},
            {"gnb_var_smoothing", gnb_var_smoothing},
            {"mlp_hidden", mlp_hidden},
            {"mlp_learning_rate", mlp_learning_rate},
            {"mlp_alpha", mlp_alpha},
            {"mlp_batch_size", mlp_batch_size},
            {"mlp_max_epochs", mlp_max_epochs},
            {"mlp_validation_fraction", mlp_validation_fraction},
            {"mlp_patience", mlp_patience},
            {"mlp_tol", mlp_tol},
            {"mlp_zero_init", mlp_zero_init},
            {"mlp_monitor", mlp_monitor == MlpMonitor::accuracy ? "accuracy" : "loss"},
            {"mlp_stopping", mlp_stopping == MlpStopping::holdout ? "holdout" : "validation"},
            {"standardize", standardize}};
}

ClassifierSpec ClassifierSpec::from_json(const nlohmann::json& j) {
    ClassifierSpec s;
    if (j.is_string()) {
        s.kind = parse_classifier_kind(j.get<std::string>());
        return s;
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") s.kind = parse_classifier_kind(value.get<std::string>());
        else if (key == "knn_k") value.get_to(s.knn_k);
        else if (key == "logreg_c") value.get_to(s.logreg_c);
        else if (key == "logreg_tol") value.get_to(s.logreg_tol);
        else if (key == "logreg_max_iter") value.get_to(s.logreg_max_iter);
        else if (key == "gnb_var_smoothing") value.get_to(s.gnb_var_smoothing);
        else if (key == "mlp_hidden") value.get_to(s.mlp_hidden);
        else if (key == "mlp_learning_rate") value.get_to(s.mlp_learning_rate);
        else if (key == "mlp_alpha") value.get_to(s.mlp_alpha);
        else if (key == "mlp_batch_size") value.get_to(s.mlp_batch_size);
        else if (key == "mlp_max_epochs") value.get_to(s.mlp_max_epochs);
        else if (key == "mlp_validation_fraction") value.get_to(s.mlp_validation_fraction);
        else if (key == "mlp_patience") value.get_to(s.mlp_patience);
        else if (key == "mlp_tol") value.get_to(s.mlp_tol);
        else if (key == "mlp_zero_init") value.get_to(s.mlp_zero_init);
        else if (key == "standardize") value.get_to(s.standardize);
        else if (key == "mlp_monitor") {
            const auto m = value.get<std::string>();
            if (m == "accuracy") s.mlp_monitor = MlpMonitor::accuracy;
            else if (m == "loss") s.mlp_monitor = MlpMonitor::loss;
            else throw ConfigError("mlp_monitor must be 'accuracy' or 'loss'");
        } else if (key == "mlp_stopping") {
            const auto m = value.get<std::string>();
            if (m == "holdout") s.mlp_stopping = MlpStopping::holdout;
            else if (m == "validation") s.mlp_stopping = MlpStopping::validation;
            else throw ConfigError("mlp_stopping must be 'holdout' or 'validation'");
        }
        else throw ConfigError("unknown classifier key '" + key + "'");
    }
    s.validate();
    return s;
}

static Matrix apply_standardization(const Matrix& x, const std::vector<double>& shift, const std::vector<double>& scale) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - shift[j]) / scale[j];
    return out;
}

std::vector<int> argmax_rows(const Matrix& scores) {
    std::vector<int> out(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best)) best = c;
        out[i] = static_cast<int>(best);
    }
    return out;
}

Classifier fit(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y, std::size_t num_classes,
               std::uint64_t seed, const Validation& validation) {
    spec.validate();
    if (x.rows() != y.size()) throw DimensionError("fit: label count differs from row count");
    if (x.rows() == 0) throw ContractError("fit: empty training set");
    if (num_classes < 2) throw ContractError("fit: need at least two classes");
    std::vector<std::size_t> counts(num_classes, 0);
    for (int v : y) {
        if (v < 0 || static_cast<std::size_t>(v) >= num_classes) throw ContractError("fit: label out of range");
        ++counts[static_cast<std::size_t>(v)];
    }

    if (spec.standardize) {
        std::vector<double> shift(x.cols(), 0.0), scale(x.cols(), 1.0);
        const auto n = static_cast<double>(x.rows());
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double mean = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
            mean /= n;
            for (std::size_t i = 0; i < x.rows(); ++i) sq += (x(i, j) - mean) * (x(i, j) - mean);
            shift[j] = mean;
            if (sq / n > 0.0) scale[j] = std::sqrt(sq / n);
        }
        auto inner = spec;
        inner.standardize = false;
        Matrix val_x;
        Validation val = validation;
        if (validation.x != nullptr) {
            if (validation.x->cols() != x.cols())
                throw DimensionError("fit: validation data does not match the training layout");
            val_x = apply_standardization(*validation.x, shift, scale);
            val.x = &val_x;
        }
        auto m = fit(inner, apply_standardization(x, shift, scale), y, num_classes, seed, val);
        m.spec_ = spec;
        m.shift_ = std::move(shift);
        m.scale_ = std::move(scale);
        return m;
    }

    Classifier m;
    m.spec_ = spec;
    m.width_ = x.cols();
    m.classes_ = num_classes;
    if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) == 1) {
        m.degenerate_ = true;
        m.constant_label_ = y[0];
        log_warning(std::string(to_string(spec.kind)) + ": training data has a single class; predicting class " +
                    std::to_string(y[0]));
        return m;
    }

    switch (spec.kind) {
        case ClassifierKind::knn:
            m.train_x_ = x;
            m.train_y_.assign(y.begin(), y.end());
            break;

        case ClassifierKind::logreg: {
            const std::size_t k = num_classes == 2 ? 1 : num_classes;
            const LogregProblem prob{x, y, k, 1.0 / spec.logreg_c};
            const auto theta = solve_logreg(prob, spec.logreg_tol, spec.logreg_max_iter, m.iterations_);
            m.w1_ = Matrix(x.cols(), k, std::vector<double>(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(x.cols() * k)));
            m.b1_ = Matrix(1, k, std::vector<double>(theta.end() - static_cast<std::ptrdiff_t>(k), theta.end()));
            break;
        }

        case ClassifierKind::gnb: {
            const std::size_t d = x.cols();
            // smoothing relative to the largest per-feature variance of all rows
            double max_var = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double mean = 0.0, sq = 0.0;
                for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
                mean /= static_cast<double>(x.rows());
                for (std::size_t i = 0; i < x.rows(); ++i) sq += (x(i, j) - mean) * (x(i, j) - mean);
                max_var = std::max(max_var, sq / static_cast<double>(x.rows()));
            }
            const double epsilon = spec.gnb_var_smoothing * (max_var > 0.0 ? max_var : 1.0);
            m.means_ = Matrix(num_classes, d);
            m.variances_ = Matrix(num_classes, d);
            m.log_priors_.assign(num_classes, -std::numeric_limits<double>::infinity());
            for (std::size_t i = 0; i < x.rows(); ++i)
                for (std::size_t j = 0; j < d; ++j) m.means_(static_cast<std::size_t>(y[i]), j) += x(i, j);
            for (std::size_t c = 0; c < num_classes; ++c)
                if (counts[c] > 0)
                    for (std::size_t j = 0; j < d; ++j) m.means_(c, j) /= static_cast<double>(counts[c]);
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const auto c = static_cast<std::size_t>(y[i]);
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = x(i, j) - m.means_(c, j);
                    m.variances_(c, j) += diff * diff;
                }
            }
            for (std::size_t c = 0; c < num_classes; ++c) {
                if (counts[c] == 0) continue;
                for (std::size_t j = 0; j < d; ++j)
                    m.variances_(c, j) = m.variances_(c, j) / static_cast<double>(counts[c]) + epsilon;
                m.log_priors_[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(x.rows()));
            }
            break;
        }

        case ClassifierKind::mlp: {
            const Rng base(seed);
            Rng init_rng = base.derive(0);
            Rng split_rng = base.derive(1);
            Rng batch_rng = base.derive(2);
            const std::size_t d = x.cols(), h = spec.mlp_hidden, L = num_classes;
            auto glorot = [&](std::size_t in, std::size_t out, std::size_t rows, std::size_t cols) {
                Matrix w(rows, cols);
                if (spec.mlp_zero_init) return w;
                const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
                for (double& v : w.data()) v = init_rng.uniform(-bound, bound);
                return w;
            };
            ParamMap params;
            params.add("w1", glorot(d, h, d, h));
            params.add("b1", glorot(d, h, 1, h));
            params.add("w2", glorot(h, L, h, L));
            params.add("b2", glorot(h, L, 1, L));

            std::vector<std::size_t> order(x.rows());
            std::iota(order.begin(), order.end(), std::size_t{0});
            split_rng.shuffle(std::span<std::size_t>(order));
            const bool external = spec.mlp_stopping == MlpStopping::validation && validation.x != nullptr &&
                                  validation.x->rows() > 0;
            std::size_t n_val = 0;
            if (!external) {
                n_val = static_cast<std::size_t>(std::ceil(spec.mlp_validation_fraction * static_cast<double>(x.rows())));
                if (n_val >= x.rows()) n_val = 0;
            }
            const std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
            const std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
            Matrix val_x = select_rows(x, val_idx);
            std::vector<int> val_y;
            for (auto i : val_idx) val_y.push_back(y[i]);
            if (external) {
                if (validation.x->cols() != d || validation.y.size() != validation.x->rows())
                    throw DimensionError("fit: validation data does not match the training layout");
                val_x = *validation.x;
                val_y.assign(validation.y.begin(), validation.y.end());
                n_val = val_y.size();
            }

            Optimizer opt({.kind = OptimizerKind::adam, .learning_rate = spec.mlp_learning_rate});
            const std::size_t batch = std::min(spec.mlp_batch_size, train_idx.size());
            std::vector<std::size_t> shuffled = train_idx;
            double best = -std::numeric_limits<double>::infinity();
            ParamMap best_params = params;
            std::size_t stale = 0;
            std::vector<int> by;
            for (std::size_t epoch = 1; epoch <= spec.mlp_max_epochs; ++epoch) {
                batch_rng.shuffle(std::span<std::size_t>(shuffled));
                double epoch_loss = 0.0;
                for (std::size_t start = 0; start < shuffled.size(); start += batch) {
                    const std::size_t stop = std::min(shuffled.size(), start + batch);
                    const std::span<const std::size_t> idx(shuffled.data() + start, stop - start);
                    by.clear();
                    for (auto i : idx) by.push_back(y[i]);
                    ad::Graph g;
                    const auto p = g.bind(params);
                    ad::Var loss = ad::softmax_cross_entropy(mlp_logits(g, p, select_rows(x, idx)), by);
                    if (spec.mlp_alpha > 0.0) {
                        const ad::Var penalty = ad::add(ad::sum(ad::square(p["w1"])), ad::sum(ad::square(p["w2"])));
                        loss = ad::add(loss, ad::scale(penalty, 0.5 * spec.mlp_alpha / static_cast<double>(idx.size())));
                    }
                    const double lv = loss.value()(0, 0);
                    if (!std::isfinite(lv)) throw NumericalError("mlp: non-finite loss at epoch " + std::to_string(epoch));
                    epoch_loss += lv * static_cast<double>(idx.size());
                    g.backward(loss);
                    opt.step(params, g.gradients(p));
                }
                m.iterations_ = epoch;
                // validation accuracy or loss when a slice exists, else training loss
                double score = -epoch_loss / static_cast<double>(shuffled.size());
                if (n_val > 0 && spec.mlp_monitor == MlpMonitor::accuracy)
                    score = accuracy(val_y, argmax_rows(mlp_forward(params, val_x)));
                else if (n_val > 0)
                    score = -mean_cross_entropy(mlp_forward(params, val_x), val_y);
                if (score >= best + spec.mlp_tol) stale = 0;
                else ++stale;
                if (score > best) {
                    best = score;
                    best_params = params;
                }
                if (stale >= spec.mlp_patience) break;
            }
            if (n_val > 0 && m.iterations_ > 0) params = std::move(best_params);
            m.w1_ = params.at("w1");
            m.b1_ = params.at("b1");
            m.w2_ = params.at("w2");
            m.b2_ = params.at("b2");
            break;
        }
    }
    return m;
}

Matrix Classifier::scores(const Matrix& x) const {
    if (x.cols() != width_)
        throw DimensionError("predict: expected " + std::to_string(width_) + " features, got " + std::to_string(x.cols()));
    return shift_.empty() ? raw_scores(x) : raw_scores(apply_standardization(x, shift_, scale_));
}

Matrix Classifier::raw_scores(const Matrix& x) const {
    Matrix s(x.rows(), classes_);
    if (degenerate_) {
        for (std::size_t i = 0; i < x.rows(); ++i) s(i, static_cast<std::size_t>(constant_label_)) = 1.0;
        return s;
    }
    switch (spec_.kind) {
        case ClassifierKind::knn: {
            const std::size_t n = train_x_.rows();
            const std::size_t k = std::min(spec_.knn_k, n);
            std::vector<std::pair<double, std::size_t>> dist(n);
            for (std::size_t i = 0; i < x.rows(); ++i) {
                for (std::size_t t = 0; t < n; ++t) dist[t] = {squared_distance(x.row(i), train_x_.row(t)), t};
                std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
                for (std::size_t t = 0; t < k; ++t) s(i, static_cast<std::size_t>(train_y_[dist[t].second])) += 1.0;
            }
            break;
        }
        case ClassifierKind::logreg: {
            const Matrix z = matmul(x, w1_);
            for (std::size_t i = 0; i < x.rows(); ++i) {
                if (classes_ == 2) s(i, 1) = z(i, 0) + b1_(0, 0);
                else
                    for (std::size_t c = 0; c < classes_; ++c) s(i, c) = z(i, c) + b1_(0, c);
            }
            break;
        }
        case ClassifierKind::gnb: {
            for (std::size_t i = 0; i < x.rows(); ++i)
                for (std::size_t c = 0; c < classes_; ++c) {
                    double ll = log_priors_[c];
                    if (std::isfinite(ll))
                        for (std::size_t j = 0; j < width_; ++j) {
                            const double v = variances_(c, j), diff = x(i, j) - means_(c, j);
                            ll -= 0.5 * std::log(2.0 * std::numbers::pi * v) + diff * diff / (2.0 * v);
                        }
                    s(i, c) = ll;
                }
            break;
        }
        case ClassifierKind::mlp: {
            ParamMap p;
            p.add("w1", w1_);
            p.add("b1", b1_);
            p.add("w2", w2_);
            p.add("b2", b2_);
            s = mlp_forward(p, x);
            break;
        }
    }
    return s;
}

std::vector<int> Classifier::predict(const Matrix& x) const { return argmax_rows(scores(x)); }

double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.empty()) throw ContractError("balanced_accuracy: empty input");
    if (y_true.size() != y_pred.size()) throw ContractError("balanced_accuracy: length mismatch");
    const int max_label = *std::max_element(y_true.begin(), y_true.end());
    if (*std::min_element(y_true.begin(), y_true.end()) < 0) throw ContractError("balanced_accuracy: negative label");
    std::vector<std::size_t> total(static_cast<std::size_t>(max_label) + 1, 0), hit(total.size(), 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const auto c = static_cast<std::size_t>(y_true[i]);
        ++total[c];
        if (y_pred[i] == y_true[i]) ++hit[c];
    }
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < total.size(); ++c) {
        if (total[c] == 0) continue;
        sum += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
        ++present;
    }
    return sum / static_cast<double>(present);
}

}  // namespace tabdistill::models
