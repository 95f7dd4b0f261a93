#include "tabdistill/bench/plan.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "tabdistill/data/csv.hpp"
#include "tabdistill/numerics/errors.hpp"

namespace tabdistill::bench {

namespace {

using nlohmann::json;

template <typename T, typename Parse>
std::vector<T> parse_list(const json& value, Parse parse) {
    if (!value.is_array()) throw ConfigError("plan: expected an array, got " + value.dump());
    std::vector<T> out;
    for (const auto& v : value) out.push_back(parse(v));
    return out;
}

json kmeans_json(const distill::KMeansOptions& k) {
    return {{"restarts", k.restarts}, {"max_iterations", k.max_iterations}};
}

distill::KMeansOptions kmeans_from(const json& j) {
    distill::KMeansOptions k;
    for (const auto& [key, v] : j.items()) {
        if (key == "restarts") v.get_to(k.restarts);
        else if (key == "max_iterations") v.get_to(k.max_iterations);
        else throw ConfigError("unknown kmeans key '" + key + "'");
    }
    return k;
}

}  // namespace

json DatasetSpec::to_json() const {
    json j{{"name", name}};
    if (synthetic.empty()) {
        j["csv"] = csv.generic_string();
        j["sidecar"] = sidecar.generic_string();
    } else {
        j["synthetic"] = synthetic;
        j["params"] = params;
        j["seed"] = seed;
    }
    return j;
}

DatasetSpec DatasetSpec::from_json(const json& j) {
    DatasetSpec d;
    for (const auto& [key, v] : j.items()) {
        if (key == "name") v.get_to(d.name);
        else if (key == "csv") d.csv = v.get<std::string>();
        else if (key == "sidecar") d.sidecar = v.get<std::string>();
        else if (key == "synthetic") v.get_to(d.synthetic);
        else if (key == "params") d.params = v;
        else if (key == "seed") v.get_to(d.seed);
        else throw ConfigError("unknown dataset key '" + key + "'");
    }
    if (d.name.empty()) throw ConfigError("dataset entry without a name");
    if (d.synthetic.empty() == d.csv.empty())
        throw ConfigError("dataset '" + d.name + "' needs exactly one of 'csv' or 'synthetic'");
    if (!d.csv.empty() && d.sidecar.empty()) throw ConfigError("dataset '" + d.name + "' has no sidecar");
    if (!d.synthetic.empty() && d.synthetic != "annulus" && d.synthetic != "blobs" && d.synthetic != "mixed")
        throw ConfigError("dataset '" + d.name + "': unknown synthetic kind '" + d.synthetic + "'");
    return d;
}

std::string EncoderSpec::tag() const {
    return std::string(repr::to_string(config.arch)) + (sft ? "*" : "");
}

json EncoderSpec::to_json() const {
    return {{"config", config.to_json()}, {"train", train.to_json()}, {"sft", sft}, {"fine_tune", fine_tune.to_json()}};
}

EncoderSpec EncoderSpec::from_json(const json& j) {
    EncoderSpec e;
    bool explicit_fine_tune = false;
    for (const auto& [key, v] : j.items()) {
        if (key == "config") e.config = repr::EncoderConfig::from_json(v);
        else if (key == "train") e.train = repr::TrainConfig::from_json(v);
        else if (key == "sft") v.get_to(e.sft);
        else if (key == "fine_tune") {
            e.fine_tune = repr::TrainConfig::from_json(v);
            explicit_fine_tune = true;
        } else throw ConfigError("unknown encoder key '" + key + "'");
    }
    if (!explicit_fine_tune) e.fine_tune = e.train;
    e.config.validate();
    e.train.validate();
    e.fine_tune.validate();
    return e;
}

void RunPlan::validate() const {
    if (datasets.empty()) throw ConfigError("plan: no datasets");
    if (classifiers.empty()) throw ConfigError("plan: no classifiers");
    if (methods.empty() || spaces.empty() || outputs.empty() || ipcs.empty() || seeds.empty())
        throw ConfigError("plan: empty method, space, output, ipc or seed grid");
    std::set<std::string> names;
    for (const auto& d : datasets)
        if (!names.insert(d.name).second) throw ConfigError("plan: duplicate dataset name '" + d.name + "'");
    for (const auto& r : representations)
        if (r != "original" && r != "encoded" && r != "decoded")
            throw ConfigError("plan: unknown representation '" + r + "'");
    for (const auto s : spaces)
        if (s == distill::Space::decoded) throw ConfigError("plan: distillation cannot run in decoded space");
    if (std::count(spaces.begin(), spaces.end(), distill::Space::latent) > 0 && encoders.empty())
        throw ConfigError("plan: latent space requested but no encoders configured");
    std::set<std::string> tags;
    for (const auto& e : encoders)
        if (!tags.insert(e.tag()).second) throw ConfigError("plan: duplicate encoder tag '" + e.tag() + "'");
    for (const auto ipc : ipcs)
        if (ipc == 0) throw ConfigError("plan: ipc must be positive");
    if (baselines && baseline_seeds.size() < 5)
        throw ConfigError("plan: relative regret needs at least 5 baseline seeds");
    if (workers == 0) throw ConfigError("plan: workers must be positive");
    std::set<std::string> kinds;
    for (const auto& c : classifiers) {
        c.validate();
        if (!kinds.insert(models::to_string(c.kind)).second)
            throw ConfigError(std::string("plan: classifier kind '") + models::to_string(c.kind) + "' listed twice");
    }
    distill::DistillConfig probe;
    probe.kmeans = kmeans;
    probe.kip = kip;
    probe.gm = gm;
    probe.validate();
}

json RunPlan::to_json() const {
    json j;
    j["name"] = name;
    j["datasets"] = json::array();
    for (const auto& d : datasets) j["datasets"].push_back(d.to_json());
    j["split_seed"] = split_seed;
    j["homogenizer"] = {{"bins", homogenizer.bins},
                        {"strategy", homogenizer.strategy == data::BinStrategy::quantile ? "quantile" : "uniform"}};
    j["encoders"] = json::array();
    for (const auto& e : encoders) j["encoders"].push_back(e.to_json());
    j["methods"] = json::array();
    for (const auto m : methods) j["methods"].push_back(distill::to_string(m));
    j["spaces"] = json::array();
    for (const auto s : spaces) j["spaces"].push_back(distill::to_string(s));
    j["outputs"] = json::array();
    for (const auto o : outputs) j["outputs"].push_back(distill::to_string(o));
    j["representations"] = representations;
    j["ipc"] = ipcs;
    j["seeds"] = seeds;
    j["classifiers"] = json::array();
    for (const auto& c : classifiers) j["classifiers"].push_back(c.to_json());
    j["kmeans"] = kmeans_json(kmeans);
    j["kip"] = kip.to_json();
    j["gm"] = gm.to_json();
    j["baselines"] = baselines;
    j["baseline_seeds"] = baseline_seeds;
    j["workers"] = workers;
    return j;
}

RunPlan RunPlan::from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("plan: top level must be an object");
    RunPlan p;
    for (const auto& [key, v] : j.items()) {
        if (key == "name") v.get_to(p.name);
        else if (key == "datasets") p.datasets = parse_list<DatasetSpec>(v, DatasetSpec::from_json);
        else if (key == "split_seed") v.get_to(p.split_seed);
        else if (key == "homogenizer") {
            for (const auto& [k, hv] : v.items()) {
                if (k == "bins") hv.get_to(p.homogenizer.bins);
                else if (k == "strategy") {
                    const auto s = hv.get<std::string>();
                    if (s == "quantile") p.homogenizer.strategy = data::BinStrategy::quantile;
                    else if (s == "uniform") p.homogenizer.strategy = data::BinStrategy::uniform;
                    else throw ConfigError("plan: unknown bin strategy '" + s + "'");
                } else throw ConfigError("unknown homogenizer key '" + k + "'");
            }
        } else if (key == "encoders") p.encoders = parse_list<EncoderSpec>(v, EncoderSpec::from_json);
        else if (key == "methods")
            p.methods = parse_list<distill::Method>(v, [](const json& x) { return distill::parse_method(x.get<std::string>()); });
        else if (key == "spaces")
            p.spaces = parse_list<distill::Space>(v, [](const json& x) { return distill::parse_space(x.get<std::string>()); });
        else if (key == "outputs")
            p.outputs = parse_list<distill::OutputVariant>(
                v, [](const json& x) { return distill::parse_output_variant(x.get<std::string>()); });
        else if (key == "representations") v.get_to(p.representations);
        else if (key == "ipc") v.get_to(p.ipcs);
        else if (key == "seeds") v.get_to(p.seeds);
        else if (key == "classifiers")
            p.classifiers = parse_list<models::ClassifierSpec>(v, models::ClassifierSpec::from_json);
        else if (key == "kmeans") p.kmeans = kmeans_from(v);
        else if (key == "kip") p.kip = distill::KipConfig::from_json(v);
        else if (key == "gm") p.gm = distill::GmConfig::from_json(v);
        else if (key == "baselines") v.get_to(p.baselines);
        else if (key == "baseline_seeds") v.get_to(p.baseline_seeds);
        else if (key == "workers") v.get_to(p.workers);
        else throw ConfigError("unknown plan key '" + key + "'");
    }
    for (auto& d : p.datasets) {
        if (!d.csv.empty() && d.csv.is_relative() && !base_dir.empty()) d.csv = base_dir / d.csv;
        if (!d.sidecar.empty() && d.sidecar.is_relative() && !base_dir.empty()) d.sidecar = base_dir / d.sidecar;
    }
    p.validate();
    return p;
}

RunPlan RunPlan::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(data::read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("plan " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

std::string RunPlan::hash() const {
    // worker count does not change results, so it stays out of the hash
    auto j = to_json();
    j.erase("workers");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunEntry::describe(const RunPlan& plan) const {
    std::string s = plan.datasets.at(dataset).name + "/";
    s += encoder ? plan.encoders.at(*encoder).tag() : "none";
    if (full) return s + "/full";
    char buf[64];
    std::snprintf(buf, sizeof buf, "/ipc%zu/seed%llu", ipc, static_cast<unsigned long long>(seed));
    return s + "/" + distill::to_string(method) + "/" + distill::to_string(output) + buf;
}

std::vector<RunEntry> expand(const RunPlan& plan, bool baselines_only) {
    using distill::Method;
    using distill::OutputVariant;
    const auto wants = [&](const char* r) {
        return std::find(plan.representations.begin(), plan.representations.end(), r) != plan.representations.end();
    };
    std::vector<RunEntry> out;
    for (std::size_t d = 0; d < plan.datasets.size(); ++d) {
        std::set<std::uint64_t> baseline_random;
        if (plan.baselines || baselines_only) {
            RunEntry full;
            full.dataset = d;
            full.full = true;
            full.representations = {"original"};
            out.push_back(full);
            for (const auto s : plan.baseline_seeds) {
                if (!baseline_random.insert(s).second) continue;
                RunEntry r;
                r.dataset = d;
                r.method = Method::random;
                r.ipc = kBaselineIpc;
                r.seed = s;
                r.representations = {"original"};
                out.push_back(r);
            }
        }
        if (baselines_only) continue;

        std::vector<std::optional<std::size_t>> spaces;
        for (const auto sp : plan.spaces) {
            if (sp == distill::Space::original) spaces.emplace_back();
            else
                for (std::size_t e = 0; e < plan.encoders.size(); ++e) spaces.emplace_back(e);
        }
        for (const auto& enc : spaces)
            for (const auto m : plan.methods)
                for (const auto o : plan.outputs) {
                    if (o == OutputVariant::closest_real && !distill::supports_closest_real(m)) continue;
                    std::vector<std::string> reps;
                    if (!enc) {
                        if (wants("original")) reps.push_back("original");
                    } else {
                        if (wants("encoded")) reps.push_back("encoded");
                        if (wants("decoded")) reps.push_back("decoded");
                        if (o == OutputVariant::closest_real && wants("original")) reps.push_back("original");
                    }
                    if (reps.empty()) continue;
                    for (const auto ipc : plan.ipcs)
                        for (const auto s : plan.seeds) {
                            if (!enc && m == Method::random && o == OutputVariant::as_is && ipc == kBaselineIpc &&
                                baseline_random.count(s) > 0)
                                continue;
                            RunEntry r;
                            r.dataset = d;
                            r.encoder = enc;
                            r.method = m;
                            r.output = o;
                            r.ipc = ipc;
                            r.seed = s;
                            r.representations = reps;
                            out.push_back(std::move(r));
                        }
                }
    }
    return out;
}

}  // namespace tabdistill::bench
