// Command-line front end: distill, bench, report, baselines, grad-check.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "tabdistill/bench/pipeline.hpp"
#include "tabdistill/bench/plan.hpp"
#include "tabdistill/bench/report.hpp"
#include "tabdistill/bench/selfcheck.hpp"
#include "tabdistill/bench/store.hpp"
#include "tabdistill/numerics/errors.hpp"

namespace fs = std::filesystem;
using namespace tabdistill;

namespace {

struct Common {
    std::string plan_path;
    std::string out = "results";
    std::optional<std::uint64_t> seed;
    std::size_t workers = 0;
};

bench::RunPlan load_plan(const Common& c) {
    auto plan = bench::RunPlan::load(c.plan_path);
    if (c.seed) plan.seeds = {*c.seed};
    if (c.workers > 0) plan.workers = c.workers;
    plan.validate();
    return plan;
}

void print_summary(const bench::BenchSummary& s, const fs::path& out) {
    std::printf("%zu entries, %zu records (%zu failed) -> %s\n", s.entries, s.records, s.failed,
                (out / "records.jsonl").string().c_str());
}

int run_distill(const Common& c, const std::string& dataset, const std::string& method, const std::string& space,
                const std::string& output, std::size_t ipc, std::size_t encoder) {
    const auto plan = load_plan(c);
    bench::RunEntry entry;
    entry.dataset = plan.datasets.size();
    for (std::size_t d = 0; d < plan.datasets.size(); ++d)
        if (dataset.empty() || plan.datasets[d].name == dataset) {
            entry.dataset = d;
            break;
        }
    if (entry.dataset == plan.datasets.size()) throw ConfigError("dataset '" + dataset + "' is not in the plan");
    entry.method = distill::parse_method(method);
    entry.output = distill::parse_output_variant(output);
    entry.ipc = ipc;
    entry.seed = c.seed.value_or(0);
    const auto sp = distill::parse_space(space);
    if (sp == distill::Space::decoded) throw ConfigError("distillation cannot run in decoded space");
    if (sp == distill::Space::latent) {
        if (encoder >= plan.encoders.size()) throw ConfigError("encoder index out of range");
        entry.encoder = encoder;
        entry.representations = {"encoded", "decoded"};
        if (entry.output == distill::OutputVariant::closest_real) entry.representations.push_back("original");
    } else {
        entry.representations = {"original"};
    }
    distill::DistillConfig probe;
    probe.method = entry.method;
    probe.ipc = ipc;
    probe.output = entry.output;
    probe.validate();

    const auto data = bench::prepare_data(plan.datasets[entry.dataset], plan);
    bench::EntryResult result;
    if (entry.encoder) {
        const auto enc = bench::train_encoder(data, plan.encoders[*entry.encoder]);
        result = bench::run_tdcoler(plan, entry, data, enc);
    } else {
        result = bench::run_vanilla(plan, entry, data);
    }
    bench::ResultsStore store(c.out);
    for (const auto& r : result.records) {
        store.append(r);
        if (r.ok())
            std::printf("%-8s %-9s balanced accuracy %.4f\n", r.classifier.c_str(), r.representation.c_str(),
                        r.balanced_accuracy);
        else
            std::printf("%-8s %-9s FAILED at %s: %s\n", r.classifier.c_str(), r.representation.c_str(),
                        r.failed_stage.c_str(), r.message.c_str());
    }
    if (result.set) {
        const auto path = fs::path(c.out) / "distilled.json";
        result.set->save(path);
        std::printf("distilled set (%zu rows) -> %s\n", result.set->size(), path.string().c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular data distillation toolkit"};
    app.require_subcommand(1);
    Common common;

    const auto add_common = [&](CLI::App* sub, bool needs_plan) {
        auto* plan = sub->add_option("--plan", common.plan_path, "Plan file (JSON)");
        if (needs_plan) plan->required()->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", common.seed, "Override the plan's distillation seeds with one seed");
        sub->add_option("--workers", common.workers, "Concurrent plan entries (default: plan value)");
    };

    std::string dataset, method = "kmeans", space = "original", output = "as-is";
    std::size_t ipc = 10, encoder = 0;
    auto* distill_cmd = app.add_subcommand("distill", "Run one pipeline from a plan's dataset and settings");
    add_common(distill_cmd, true);
    distill_cmd->add_option("--dataset", dataset, "Dataset name (default: first in plan)");
    distill_cmd->add_option("--method", method, "random|kmeans|agglomerative|kip|gm")->capture_default_str();
    distill_cmd->add_option("--space", space, "original|latent")->capture_default_str();
    distill_cmd->add_option("--output", output, "as-is|closest-real")->capture_default_str();
    distill_cmd->add_option("--ipc", ipc, "Instances per class")->capture_default_str();
    distill_cmd->add_option("--encoder", encoder, "Index into the plan's encoders")->capture_default_str();

    auto* bench_cmd = app.add_subcommand("bench", "Execute a full plan and write reports");
    add_common(bench_cmd, true);
    auto* base_cmd = app.add_subcommand("baselines", "Run only the full-data and random@10 baselines");
    add_common(base_cmd, true);
    auto* report_cmd = app.add_subcommand("report", "Regenerate report tables from a results directory");
    add_common(report_cmd, false);
    std::uint64_t check_seed = 0;
    auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference checks of the training objectives");
    grad_cmd->add_option("--seed", check_seed, "Instance seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*distill_cmd) return run_distill(common, dataset, method, space, output, ipc, encoder);
        if (*bench_cmd || *base_cmd) {
            const auto plan = load_plan(common);
            bench::BenchOptions opt;
            opt.out = common.out;
            opt.baselines_only = static_cast<bool>(*base_cmd);
            print_summary(bench::run_bench(plan, opt), opt.out);
            return 0;
        }
        if (*report_cmd) {
            const bench::ResultsStore store(common.out);
            for (const auto& f : bench::emit_reports(store.load(), common.out)) std::printf("%s\n", f.string().c_str());
            return 0;
        }
        if (*grad_cmd) {
            bool ok = true;
            for (const auto& r : bench::gradient_self_check(check_seed)) {
                std::printf("%-24s %s  entries %2zu  max rel err %.3e (tol %.0e)\n", r.name.c_str(),
                            r.passed ? "PASS" : "FAIL", r.checked, r.max_rel_error, r.tolerance);
                ok = ok && r.passed;
            }
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
