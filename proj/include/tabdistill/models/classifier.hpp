#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabdistill/numerics/matrix.hpp"

namespace tabdistill::models {

enum class ClassifierKind { knn, logreg, gnb, mlp };

const char* to_string(ClassifierKind kind) noexcept;
ClassifierKind parse_classifier_kind(const std::string& text);

// Early-stopping signal of the mlp.
enum class MlpMonitor { accuracy, loss };
// Where the mlp's early-stopping rows come from: a slice of the training
// rows, or validation data handed to fit() (falls back to the slice when
// none is given).
enum class MlpStopping { holdout, validation };

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::knn;

    std::size_t knn_k = 5;

    double logreg_c = 1.0;
    double logreg_tol = 1e-4;  // Euclidean norm of the objective's gradient
    std::size_t logreg_max_iter = 100000;

    double gnb_var_smoothing = 1e-9;

    std::size_t mlp_hidden = 100;
    double mlp_learning_rate = 1e-4;  // Adam
    double mlp_alpha = 1e-4;          // L2 weight penalty
    std::size_t mlp_batch_size = 200;
    std::size_t mlp_max_epochs = 200;
    double mlp_validation_fraction = 0.1;
    std::size_t mlp_patience = 10;  // epochs without validation improvement
    double mlp_tol = 1e-4;
    bool mlp_zero_init = false;
    MlpMonitor mlp_monitor = MlpMonitor::accuracy;
    MlpStopping mlp_stopping = MlpStopping::holdout;

    // Shift and scale every column to zero mean and unit variance using the
    // training rows' statistics (constant columns are only centred). Applies
    // to any kind; the same transform is applied to validation and
    // prediction inputs.
    bool standardize = false;

    void validate() const;
    nlohmann::json to_json() const;
    static ClassifierSpec from_json(const nlohmann::json& j);
};

// Optional held-out rows in the training feature space; only the mlp with
// MlpStopping::validation reads them.
struct Validation {
    const Matrix* x = nullptr;
    std::span<const int> y;
};

// A fitted classifier. Immutable after fit(); predict() is const and safe
// to call concurrently.
class Classifier {
public:
    ClassifierKind kind() const noexcept { return spec_.kind; }
    const ClassifierSpec& spec() const noexcept { return spec_; }
    std::size_t feature_width() const noexcept { return width_; }
    std::size_t num_classes() const noexcept { return classes_; }
    // Set when training data held one class; predict() then returns it.
    bool degenerate() const noexcept { return degenerate_; }
    // Epochs (mlp) or iterations (logreg) used by fit.
    std::size_t iterations() const noexcept { return iterations_; }

    // Fitted state: logreg weights (width x 1 for two classes, else width x L)
    // and intercepts; gnb per-class means, variances and log priors.
    const Matrix& weights() const noexcept { return w1_; }
    const Matrix& intercepts() const noexcept { return b1_; }
    const Matrix& means() const noexcept { return means_; }
    const Matrix& variances() const noexcept { return variances_; }
    const std::vector<double>& log_priors() const noexcept { return log_priors_; }

    // Throws DimensionError unless x has the training feature width.
    std::vector<int> predict(const Matrix& x) const;
    // Column shift and scale applied before the model (empty unless the spec
    // asked for standardization).
    const std::vector<double>& input_shift() const noexcept { return shift_; }
    const std::vector<double>& input_scale() const noexcept { return scale_; }
    // Per-class scores (log-probabilities for gnb, logits for logreg/mlp,
    // vote counts for knn); argmax with lowest-index ties gives predict().
    Matrix scores(const Matrix& x) const;

    friend Classifier fit(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y,
                          std::size_t num_classes, std::uint64_t seed, const Validation& validation);

private:
    ClassifierSpec spec_;
    std::size_t width_ = 0;
    std::size_t classes_ = 0;
    bool degenerate_ = false;
    int constant_label_ = 0;
    std::size_t iterations_ = 0;
    std::vector<double> shift_, scale_;

    Matrix raw_scores(const Matrix& x) const;

    // knn
    Matrix train_x_;
    std::vector<int> train_y_;
    // logreg: width x (1 or L) weights plus intercepts; gnb: means/variances
    Matrix w1_, b1_, w2_, b2_;
    Matrix means_, variances_;
    std::vector<double> log_priors_;
};

// Fits `spec` on (x, y) with labels in [0, num_classes). A training set with
// a single class yields a degenerate model and a warning.
Classifier fit(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y, std::size_t num_classes,
               std::uint64_t seed, const Validation& validation = {});

// Mean over the classes present in y_true of per-class recall. Throws
// ContractError on empty or mismatched input.
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred);

// Argmax per row, lowest index on ties.
std::vector<int> argmax_rows(const Matrix& scores);

}  // namespace tabdistill::models
