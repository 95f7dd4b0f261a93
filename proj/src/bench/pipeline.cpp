#include "tabdistill/bench/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "tabdistill/bench/report.hpp"
#include "tabdistill/bench/store.hpp"
#include "tabdistill/data/csv.hpp"
#include "tabdistill/data/synthetic.hpp"
#include "tabdistill/distill/distill.hpp"
#include "tabdistill/models/classifier.hpp"
#include "tabdistill/numerics/errors.hpp"
#include "tabdistill/numerics/log.hpp"

namespace tabdistill::bench {

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
public:
    // Seconds since construction or the previous lap.
    double lap() {
        const auto now = Clock::now();
        const double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

private:
    Clock::time_point start_ = Clock::now();
};

template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& body) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(workers, n);
    if (threads <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

double param(const nlohmann::json& p, const char* key, double fallback) { return p.value(key, fallback); }

std::size_t param(const nlohmann::json& p, const char* key, std::size_t fallback) { return p.value(key, fallback); }

eval::RunRecord base_record(const RunPlan& plan, const RunEntry& entry, const std::string& encoder_tag) {
    eval::RunRecord r;
    r.dataset = plan.datasets.at(entry.dataset).name;
    r.encoder = encoder_tag;
    r.method = entry.full ? "full" : distill::to_string(entry.method);
    r.space = distill::to_string(entry.space());
    r.variant = distill::to_string(entry.output);
    r.ipc = entry.full ? 0 : entry.ipc;
    r.seed = entry.full ? 0 : entry.seed;
    r.plan_hash = plan.hash();
    return r;
}

void fail_all(const RunPlan& plan, eval::RunRecord base, const std::vector<std::string>& representations,
              const std::string& stage, const std::string& message, EntryResult& out) {
    base.status = "failed";
    base.failed_stage = stage;
    base.message = message;
    for (const auto& rep : representations)
        for (const auto& c : plan.classifiers) {
            auto r = base;
            r.representation = rep;
            r.classifier = models::to_string(c.kind);
            out.records.push_back(std::move(r));
        }
}

// Trains every classifier on (train_x, train_y) and scores it on the test
// part of `data`, using `test_x` as its features. `val_x` holds the
// validation rows in the same representation, for early stopping.
void evaluate(const RunPlan& plan, const RunEntry& entry, const PreparedData& data, eval::RunRecord base,
              const std::string& representation, const Matrix& train_x, std::span<const int> train_y,
              const Matrix& val_x, const Matrix& test_x, EntryResult& out) {
    base.representation = representation;
    for (std::size_t ci = 0; ci < plan.classifiers.size(); ++ci) {
        const auto& spec = plan.classifiers[ci];
        auto r = base;
        r.classifier = models::to_string(spec.kind);
        std::string stage = "fit";
        try {
            Stopwatch sw;
            const auto model = models::fit(spec, train_x, train_y, data.num_classes, mix_seed(entry.seed, ci),
                                           {&val_x, data.validation_labels});
            r.stage_seconds["fit"] = sw.lap();
            stage = "predict";
            const auto pred = model.predict(test_x);
            r.balanced_accuracy = models::balanced_accuracy(data.test_labels, pred);
            r.stage_seconds["predict"] = sw.lap();
        } catch (const std::exception& e) {
            r.status = "failed";
            r.failed_stage = stage;
            r.message = e.what();
            r.balanced_accuracy = 0.0;
        }
        for (const auto& [k, v] : r.stage_seconds) r.seconds += v;
        out.records.push_back(std::move(r));
    }
}

distill::DistillConfig distill_config(const RunPlan& plan, const RunEntry& entry) {
    distill::DistillConfig cfg;
    cfg.method = entry.method;
    cfg.ipc = entry.ipc;
    cfg.space = entry.space();
    cfg.output = entry.output;
    cfg.seed = entry.seed;
    cfg.kmeans = plan.kmeans;
    cfg.kip = plan.kip;
    cfg.gm = plan.gm;
    return cfg;
}

std::vector<std::size_t> class_sizes(std::span<const int> labels, std::size_t classes) {
    std::vector<std::size_t> n(classes, 0);
    for (const int y : labels) ++n[static_cast<std::size_t>(y)];
    return n;
}

void write_matrix_json(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data::DataError("cannot write " + path.string());
    out << nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"features", m.storage()}}.dump() << '\n';
}

}  // namespace

data::Dataset load_dataset(const DatasetSpec& spec) {
    if (!spec.csv.empty()) {
        auto ds = data::load_csv(spec.csv, spec.sidecar);
        ds.name = spec.name;
        return ds;
    }
    const auto& p = spec.params;
    data::Dataset ds;
    if (spec.synthetic == "annulus") {
        data::AnnulusConfig c;
        c.rows = param(p, "rows", c.rows);
        c.features = param(p, "features", c.features);
        c.inner_radius = param(p, "inner_radius", c.inner_radius);
        c.outer_radius = param(p, "outer_radius", c.outer_radius);
        c.radial_noise = param(p, "radial_noise", c.radial_noise);
        c.nuisance_noise = param(p, "nuisance_noise", c.nuisance_noise);
        ds = data::make_annulus(c, spec.seed);
    } else if (spec.synthetic == "blobs") {
        const std::size_t classes = param(p, "classes", std::size_t{2});
        const std::size_t features = param(p, "features", std::size_t{4});
        const double spread = param(p, "spread", 3.0);
        Rng rng(mix_seed(spec.seed, 0xB10B));
        Matrix centers(classes, features);
        for (std::size_t i = 0; i < classes; ++i)
            for (std::size_t j = 0; j < features; ++j) centers(i, j) = spread * rng.normal();
        ds = data::make_blobs(param(p, "per_class", std::size_t{100}), centers, param(p, "stddev", 1.0), spec.seed);
    } else if (spec.synthetic == "mixed") {
        ds = data::make_mixed(param(p, "rows", std::size_t{500}), param(p, "numeric", std::size_t{3}),
                              param(p, "categorical", std::size_t{2}), param(p, "categories", std::size_t{4}),
                              param(p, "missing_rate", 0.05), param(p, "classes", std::size_t{2}), spec.seed);
    } else {
        throw ConfigError("unknown synthetic dataset kind '" + spec.synthetic + "'");
    }
    ds.name = spec.name;
    return ds;
}

PreparedData prepare_data(const DatasetSpec& spec, const RunPlan& plan) {
    Stopwatch sw;
    PreparedData d;
    d.dataset = load_dataset(spec);
    d.dataset.validate();
    d.num_classes = d.dataset.num_classes();
    d.split = data::stratified_split(d.dataset, {}, plan.split_seed);
    d.homogenizer = data::Homogenizer::fit(d.dataset, d.split.train, plan.homogenizer);
    d.train = d.homogenizer.encode(d.dataset, d.split.train);
    d.validation = d.homogenizer.encode(d.dataset, d.split.validation);
    d.test = d.homogenizer.encode(d.dataset, d.split.test);
    d.train_labels = data::take_labels(d.dataset.labels, d.split.train);
    d.validation_labels = data::take_labels(d.dataset.labels, d.split.validation);
    d.test_labels = data::take_labels(d.dataset.labels, d.split.test);
    d.seconds = sw.lap();
    return d;
}

TrainedEncoder train_encoder(const PreparedData& data, const EncoderSpec& spec) {
    Stopwatch sw;
    TrainedEncoder t{repr::Autoencoder::init(spec.config, data.homogenizer, spec.train.seed), spec.tag(), {}, {}, {}, {}, {},
                     0.0};
    t.pretrain = repr::train_unsupervised(t.ae, data.train, data.validation, spec.train);
    if (spec.sft)
        t.finetune = repr::fine_tune_supervised(t.ae, data.train, data.train_labels, data.validation,
                                                data.validation_labels, data.num_classes, spec.fine_tune);
    t.train_latent = t.ae.encode(data.train);
    t.validation_latent = t.ae.encode(data.validation);
    t.test_latent = t.ae.encode(data.test);
    t.seconds = sw.lap();
    return t;
}

EntryResult run_vanilla(const RunPlan& plan, const RunEntry& entry, const PreparedData& data) {
    EntryResult out;
    auto base = base_record(plan, entry, "none");
    base.stage_seconds["prepare"] = data.seconds;
    if (entry.full) {
        base.representation = "original";
        evaluate(plan, entry, data, base, "original", data.train, data.train_labels, data.validation, data.test, out);
        return out;
    }
    std::string stage = "distill";
    try {
        Stopwatch sw;
        auto outcome = distill::run_distiller(data.train, data.train_labels, data.num_classes,
                                              distill_config(plan, entry));
        base.stage_seconds["distill"] = sw.lap();
        stage = "balance";
        distill::check_class_balance(outcome.set, class_sizes(data.train_labels, data.num_classes));
        out.set = std::move(outcome.set);
    } catch (const std::exception& e) {
        fail_all(plan, base, entry.representations, stage, e.what(), out);
        return out;
    }
    out.binary_sets.emplace_back("original", *out.set);
    evaluate(plan, entry, data, base, "original", out.set->features, out.set->labels, data.validation, data.test,
             out);
    return out;
}

EntryResult run_tdcoler(const RunPlan& plan, const RunEntry& entry, const PreparedData& data,
                        const TrainedEncoder& encoder) {
    EntryResult out;
    auto base = base_record(plan, entry, encoder.tag);
    base.stage_seconds["prepare"] = data.seconds;
    base.stage_seconds["encoder"] = encoder.seconds;
    std::string stage = "distill";
    try {
        Stopwatch sw;
        auto outcome = distill::run_distiller(encoder.train_latent, data.train_labels, data.num_classes,
                                              distill_config(plan, entry));
        base.stage_seconds["distill"] = sw.lap();
        stage = "balance";
        distill::check_class_balance(outcome.set, class_sizes(data.train_labels, data.num_classes));
        out.set = std::move(outcome.set);
    } catch (const std::exception& e) {
        fail_all(plan, base, entry.representations, stage, e.what(), out);
        return out;
    }
    const auto& set = *out.set;
    for (const auto& rep : entry.representations) {
        auto rb = base;
        if (rep == "encoded") {
            evaluate(plan, entry, data, rb, rep, set.features, set.labels, encoder.validation_latent,
                     encoder.test_latent, out);
            continue;
        }
        distill::DistilledSet binary;
        try {
            Stopwatch sw;
            if (rep == "decoded") {
                binary = distill::decode_distilled(encoder.ae, set);
            } else {
                // closest-real rows in their homogenized form
                binary = set;
                binary.features = select_rows(data.train, set.source_indices);
                binary.space = distill::Space::original;
            }
            rb.stage_seconds["decode"] = sw.lap();
        } catch (const std::exception& e) {
            fail_all(plan, rb, {rep}, "decode", e.what(), out);
            continue;
        }
        evaluate(plan, entry, data, rb, rep, binary.features, binary.labels, data.validation, data.test, out);
        out.binary_sets.emplace_back(rep, std::move(binary));
    }
    return out;
}

std::string set_file_name(const eval::RunRecord& r) {
    std::string enc;
    for (const char c : r.encoder) enc += c == '*' ? std::string("-sft") : std::string(1, c);
    return enc + "_" + r.method + "_" + r.space + "_" + r.variant + "_" + r.representation + "_ipc" +
           std::to_string(r.ipc) + "_seed" + std::to_string(r.seed) + ".json";
}

BenchSummary run_bench(const RunPlan& plan, const BenchOptions& options) {
    plan.validate();
    const std::size_t workers = options.workers > 0 ? options.workers : plan.workers;
    const auto entries = expand(plan, options.baselines_only);
    ResultsStore store(options.out);
    {
        std::ofstream p(options.out / "plan.json", std::ios::binary);
        p << plan.to_json().dump(2) << '\n';
    }

    // Datasets, then the autoencoders the latent entries need.
    std::vector<std::optional<PreparedData>> prepared(plan.datasets.size());
    std::vector<std::string> prepare_errors(plan.datasets.size());
    parallel_for(plan.datasets.size(), workers, [&](std::size_t d) {
        try {
            prepared[d] = prepare_data(plan.datasets[d], plan);
        } catch (const std::exception& e) {
            prepare_errors[d] = e.what();
            log_warning("dataset '" + plan.datasets[d].name + "' failed to load: " + e.what());
        }
    });

    const std::size_t n_enc = plan.encoders.size();
    std::vector<std::size_t> needed;
    for (const auto& e : entries)
        if (e.encoder && prepared[e.dataset]) needed.push_back(e.dataset * n_enc + *e.encoder);
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    std::map<std::size_t, std::optional<TrainedEncoder>> encoders;
    std::map<std::size_t, std::string> encoder_errors;
    for (const auto k : needed) encoders[k];
    std::mutex encoder_mutex;
    parallel_for(needed.size(), workers, [&](std::size_t i) {
        const std::size_t k = needed[i];
        try {
            auto t = train_encoder(*prepared[k / n_enc], plan.encoders[k % n_enc]);
            std::lock_guard lock(encoder_mutex);
            encoders[k] = std::move(t);
        } catch (const std::exception& e) {
            std::lock_guard lock(encoder_mutex);
            encoder_errors[k] = e.what();
        }
    });

    for (std::size_t d = 0; d < plan.datasets.size(); ++d) {
        if (!prepared[d]) continue;
        const auto dir = options.out / "sets" / plan.datasets[d].name;
        std::filesystem::create_directories(dir);
        write_matrix_json(prepared[d]->train, dir / "train.json");
    }

    BenchSummary summary;
    summary.entries = entries.size();
    std::mutex result_mutex;
    parallel_for(entries.size(), workers, [&](std::size_t i) {
        const auto& entry = entries[i];
        EntryResult result;
        const std::string tag = entry.encoder ? plan.encoders[*entry.encoder].tag() : "none";
        if (!prepared[entry.dataset]) {
            fail_all(plan, base_record(plan, entry, tag), entry.representations, "prepare",
                     prepare_errors[entry.dataset], result);
        } else if (entry.encoder) {
            const std::size_t k = entry.dataset * n_enc + *entry.encoder;
            if (encoders.at(k)) {
                result = run_tdcoler(plan, entry, *prepared[entry.dataset], *encoders.at(k));
            } else {
                fail_all(plan, base_record(plan, entry, tag), entry.representations, "encoder", encoder_errors[k],
                         result);
            }
        } else {
            result = run_vanilla(plan, entry, *prepared[entry.dataset]);
        }

        std::lock_guard lock(result_mutex);
        for (const auto& r : result.records) {
            store.append(r);
            ++summary.records;
            if (!r.ok()) {
                ++summary.failed;
                log_warning(entry.describe(plan) + ": " + r.classifier + " failed at " + r.failed_stage + ": " +
                            r.message);
            }
        }
        if (!result.records.empty())
            for (const auto& [rep, set] : result.binary_sets) {
                auto r = result.records.front();
                r.representation = rep;
                set.save(options.out / "sets" / r.dataset / set_file_name(r));
            }
        if (result.set && options.observer) options.observer(entry, *result.set);
    });

    if (options.write_reports) emit_reports(store.load(), options.out);
    return summary;
}

}  // namespace tabdistill::bench
