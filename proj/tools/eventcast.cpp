// eventcast: command-line driver for the event-aware demand forecasting pipeline.

#include "eventcast/checkpoint.hpp"
#include "eventcast/eval_harness.hpp"
#include "eventcast/reasoner_remote.hpp"
#include "eventcast/synth_market.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace eventcast;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda;
    std::string config;
    std::string out;
    bool strict = false;
};

struct ReasonerFlags {
    bool oracle = false;
    bool remote = false;
    std::string template_path;
    std::string audit_path;
};

json read_json(const std::string& path) {
    try {
        return json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

/// Collects output digests and writes run_manifest.json into the out dir.
class RunManifest {
public:
    RunManifest(std::string subcommand, fs::path out_dir)
        : out_dir_(std::move(out_dir)), started_(AuditLog::utc_timestamp()) {
        doc_["subcommand"] = std::move(subcommand);
        doc_["inputs"] = json::object();
        doc_["artifacts"] = json::object();
    }

    void input(const std::string& name, const fs::path& p) { doc_["inputs"][name] = p.string(); }
    void set(const std::string& key, json v) { doc_[key] = std::move(v); }

    void artifact(const fs::path& p) {
        doc_["artifacts"][fs::relative(p, out_dir_).generic_string()] = sha256_hex(io::read_file(p));
    }

    void artifacts_under(const fs::path& dir) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file() && e.path().filename() != "run_manifest.json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) artifact(f);
    }

    void write() {
        doc_["started_at"] = started_;
        doc_["finished_at"] = AuditLog::utc_timestamp();
        io::write_file_atomic(out_dir_ / "run_manifest.json", doc_.dump(2) + "\n");
    }

private:
    fs::path out_dir_;
    std::string started_;
    json doc_;
};

PromptTemplate template_from(const ReasonerFlags& rf) {
    return rf.template_path.empty() ? default_template() : load_template(rf.template_path);
}

/// Builds the per-date reasoning function selected by the flags. The remote
/// client is kept alive by the returned closure.
ReasonFn make_reasoner(const ReasonerFlags& rf, std::size_t* workers) {
    auto tmpl = template_from(rf);
    validate_template(tmpl, kDefaultFieldCount);
    std::shared_ptr<AuditLog> audit;
    if (!rf.audit_path.empty()) audit = std::make_shared<AuditLog>(rf.audit_path);
    if (!rf.remote) {
        if (workers) *workers = 1;
        return [tmpl, audit](const DayContext& ctx) { return reason_oracle(ctx, tmpl, audit.get()); };
    }
    auto client = std::make_shared<RemoteReasoner>(RemoteConfig::from_env(),
                                                   [](const std::string& msg) { std::cerr << msg << "\n"; });
    if (workers) *workers = static_cast<std::size_t>(std::max(1, client->config().concurrency));
    return [tmpl, audit, client](const DayContext& ctx) {
        return client->reason(render_prompt(ctx, tmpl), {audit.get(), ctx.country, ctx.date});
    };
}

struct Inputs {
    Dataset dataset;
    EventDatabase db;
    SummaryStore summaries;
};

Inputs load_inputs(const std::string& data, const std::string& db_dir, std::size_t horizons, const ReasonerFlags& rf,
                   bool strict) {
    Inputs in;
    in.dataset = load_dataset(data);
    in.db = load_database(db_dir, LoadOptions{!strict});
    if (strict)
        for (const auto& r : in.dataset.regions)
            if (!in.db.knows_country(r.country)) throw UnknownCountry(r.country);
    std::size_t workers = 1;
    auto reason = make_reasoner(rf, &workers);
    in.summaries = build_summaries(in.dataset, in.db, horizons, reason, kDefaultFieldCount, workers);
    return in;
}

PipelineConfig pipeline_config(const Common& c) {
    PipelineConfig pc;
    if (!c.config.empty()) pc = read_json(c.config).get<PipelineConfig>();
    if (c.seed) pc.train.seed = *c.seed;
    if (c.lambda) pc.train.lambda = *c.lambda;
    if (pc.train.lambda < 0 || pc.train.lambda > 1) throw DataError("lambda must lie in [0, 1]");
    return pc;
}

void require_out(const Common& c) {
    if (c.out.empty()) throw CLI::RequiredError("--out");
}

std::string train_log_csv(const std::vector<double>& losses) {
    std::string out = "epoch,loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e) out += std::to_string(e + 1) + "," + text::format_double(losses[e]) + "\n";
    return out;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Common& c, std::optional<double> effect_scale) {
    require_out(c);
    ScenarioConfig sc;
    if (!c.config.empty()) sc = read_json(c.config).get<ScenarioConfig>();
    if (c.seed) sc.seed = *c.seed;
    if (effect_scale) sc.effect_scale = *effect_scale;
    const fs::path out = c.out;
    RunManifest man("gen-data", out);
    if (!c.config.empty()) man.input("config", c.config);
    man.set("config", sc);
    man.set("seed", sc.seed);
    auto market = generate(sc);
    save_dataset(market.dataset, out / "dataset.csv");
    save_database(market.db, out / "db");
    man.artifacts_under(out);
    man.write();
    std::cout << "wrote " << (out / "dataset.csv").string() << " (" << market.dataset.regions.size() << " regions) and "
              << market.db.size() << " event records\n";
    return 0;
}

int cmd_reason(const Common& c, const ReasonerFlags& rf, const std::string& db_dir, const std::string& country,
               const std::string& date) {
    auto db = load_database(db_dir, LoadOptions{!c.strict});
    auto ctx = events_for(db, country, Date::parse(date), QueryOptions{c.strict, 3});
    auto reason = make_reasoner(rf, nullptr);
    auto raw = reason(ctx);
    std::cout << raw.text;
    if (!raw.text.empty() && raw.text.back() != '\n') std::cout << '\n';
    auto fields = extract_summary(raw.text);
    std::cout << "\nParsed fields:\n";
    for (std::size_t i = 0; i < fields.fields.size(); ++i) std::cout << i + 1 << ": " << fields.fields[i] << "\n";
    return 0;
}

int cmd_prompt(const ReasonerFlags& rf, const Common& c, const std::string& db_dir, const std::string& country,
               const std::string& date) {
    auto db = load_database(db_dir, LoadOptions{!c.strict});
    auto ctx = events_for(db, country, Date::parse(date), QueryOptions{c.strict, 3});
    std::cout << render_prompt(ctx, template_from(rf), RenderOptions{c.strict}).rendered;
    return 0;
}

int cmd_parse(const std::string& input, std::size_t k) {
    std::string raw;
    if (input.empty() || input == "-") {
        raw.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
    } else {
        raw = io::read_file(input);
    }
    for (const auto& f : extract_summary(raw, k).fields) std::cout << f << "\n";
    return 0;
}

int cmd_train(const Common& c, const ReasonerFlags& rf, const std::string& data, const std::string& db_dir,
              bool no_events) {
    require_out(c);
    auto pc = pipeline_config(c);
    if (no_events) pc.use_events = false;
    auto in = load_inputs(data, db_dir, pc.model.horizons, rf, c.strict);
    const fs::path out = c.out;
    RunManifest man("train", out);
    man.input("data", data);
    man.input("db", db_dir);
    auto model = train_model(in.dataset, in.summaries, pc, [](std::size_t e, double loss) {
        std::cerr << "epoch " << e + 1 << " loss " << text::format_double(loss) << "\n";
    });
    save_checkpoint(model, out);
    io::write_file_atomic(out / "train_log.csv", train_log_csv(model.loss_trajectory));
    man.set("config", model.config);
    man.set("seed", model.config.train.seed);
    man.artifacts_under(out);
    man.write();
    return 0;
}

int cmd_forecast(const Common& c, const ReasonerFlags& rf, const std::string& ckpt, const std::string& data,
                 const std::string& db_dir, const std::string& country, const std::string& region,
                 const std::string& origin) {
    auto model = load_checkpoint(ckpt);
    const double lambda = c.lambda.value_or(model.config.train.lambda);
    if (lambda < 0 || lambda > 1) throw DataError("lambda must lie in [0, 1]");
    auto ds = load_dataset(data);
    auto db = load_database(db_dir, LoadOptions{!c.strict});
    const RegionSeries* series = nullptr;
    for (const auto& r : ds.regions)
        if (r.country == country && r.region == region) series = &r;
    if (!series) throw DataError("dataset has no region " + country + "/" + region);
    const Date od = Date::parse(origin);
    const long idx = od - series->start;
    if (idx < 0 || idx >= static_cast<long>(series->size())) throw DataError("origin date outside the dataset");
    const auto& mc = model.config.model;
    auto window = make_window<float>(*series, model.norm_for(*series), static_cast<std::size_t>(idx), mc.lookback);

    auto reason = make_reasoner(rf, nullptr);
    std::vector<TokenSeq> future;
    for (std::size_t j = 1; j <= mc.horizons; ++j) {
        if (!model.config.use_events) {
            future.emplace_back(kDefaultFieldCount, Vocab::kPad);
            continue;
        }
        auto fields = extract_summary(reason(events_for(db, country, od + static_cast<long>(j))).text);
        future.push_back(flatten_tokens(fields, model.vocab));
    }
    auto f = forecast<float>(model.params, mc, window, future, static_cast<float>(lambda));
    const auto& norm = model.norm_for(*series);
    auto denorm = [&](float v) { return static_cast<double>(v) * norm.std[0] + norm.mean[0]; };
    std::string csv = "horizon,date,trend,event,forecast\n";
    for (std::size_t j = 0; j < mc.horizons; ++j) {
        const auto ji = static_cast<Eigen::Index>(j);
        csv += std::to_string(j + 1) + "," + (od + static_cast<long>(j + 1)).str() + "," +
               text::format_double(denorm(f.trend(ji))) + "," + text::format_double(denorm(f.event(ji))) + "," +
               text::format_double(denorm(f.blended(ji))) + "\n";
    }
    if (c.out.empty()) {
        std::cout << csv;
    } else {
        const fs::path out = c.out;
        RunManifest man("forecast", out);
        man.input("checkpoint", ckpt);
        man.input("data", data);
        man.input("db", db_dir);
        man.set("lambda", lambda);
        io::write_file_atomic(out / "forecast.csv", csv);
        man.artifact(out / "forecast.csv");
        man.write();
    }
    return 0;
}

int cmd_evaluate(const Common& c, const ReasonerFlags& rf, const std::string& ckpt, const std::string& data,
                 const std::string& db_dir) {
    require_out(c);
    auto model = load_checkpoint(ckpt);
    if (c.lambda) model.config.train.lambda = *c.lambda;
    auto in = load_inputs(data, db_dir, model.config.model.horizons, rf, c.strict);
    const fs::path out = c.out;
    RunManifest man("evaluate", out);
    man.input("checkpoint", ckpt);
    man.input("data", data);
    man.input("db", db_dir);
    man.set("lambda", model.config.train.lambda);
    auto rep = evaluate(model, in.dataset, in.summaries);
    auto naive = seasonal_naive(in.dataset, model.config);
    auto naive_rep = score_values(naive.blended, naive.truth, naive.mask, naive.horizons);
    io::write_file_atomic(out / "report.csv", report_csv(rep));
    io::write_file_atomic(out / "seasonal_naive.csv", report_csv(naive_rep));
    json summary = {{"model", summary_json(rep)}, {"seasonal_naive", summary_json(naive_rep)},
                    {"lambda", model.config.train.lambda}};
    io::write_file_atomic(out / "report.json", summary.dump(2) + "\n");
    man.artifacts_under(out);
    man.write();
    std::cout << report_csv(rep);
    return 0;
}

int cmd_ablate(const Common& c, const ReasonerFlags& rf, const std::string& data, const std::string& db_dir) {
    require_out(c);
    auto pc = pipeline_config(c);
    auto in = load_inputs(data, db_dir, pc.model.horizons, rf, c.strict);
    const fs::path out = c.out;
    RunManifest man("ablate", out);
    man.input("data", data);
    man.input("db", db_dir);
    man.set("config", pc);
    auto r = ablate_events(in.dataset, in.summaries, pc);
    save_checkpoint(r.model_with, out / "with_events");
    save_checkpoint(r.model_without, out / "without_events");
    io::write_file_atomic(out / "report_with.csv", report_csv(r.with_events));
    io::write_file_atomic(out / "report_without.csv", report_csv(r.without_events));
    std::string csv = "horizon,split,mae_with,mae_without,improvement_pct\n";
    for (std::size_t h = 1; h <= r.with_events.horizons(); ++h)
        for (Split s : {Split::Overall, Split::EventDriven}) {
            const double w = r.with_events.at(h, s).mae, wo = r.without_events.at(h, s).mae;
            csv += std::to_string(h) + "," + to_string(s) + "," + text::format_double(w) + "," +
                   text::format_double(wo) + "," + text::format_double(improvement_pct(w, wo)) + "\n";
        }
    io::write_file_atomic(out / "ablation.csv", csv);
    io::write_file_atomic(out / "ablation.json", to_json(r).dump(2) + "\n");
    man.artifacts_under(out);
    man.write();
    std::cout << csv;
    return 0;
}

std::vector<double> parse_grid(const std::string& s) {
    if (s.empty()) return default_lambda_grid();
    std::vector<double> g;
    for (const auto& part : text::split(s, ',')) {
        try {
            std::size_t used = 0;
            const std::string p(text::trim(part));
            g.push_back(std::stod(p, &used));
            if (used != p.size()) throw std::invalid_argument(p);
        } catch (const std::exception&) {
            throw DataError("bad lambda grid entry '" + part + "'");
        }
    }
    return g;
}

int cmd_sweep(const Common& c, const ReasonerFlags& rf, const std::string& ckpt, const std::string& data,
              const std::string& db_dir, const std::string& grid) {
    require_out(c);
    auto model = load_checkpoint(ckpt);
    auto in = load_inputs(data, db_dir, model.config.model.horizons, rf, c.strict);
    const fs::path out = c.out;
    RunManifest man("sweep-lambda", out);
    man.input("checkpoint", ckpt);
    man.input("data", data);
    man.input("db", db_dir);
    auto sw = sweep_lambda(model, in.dataset, in.summaries, parse_grid(grid), c.seed.value_or(7));
    io::write_file_atomic(out / "sweep.csv", sweep_csv(sw));
    json summary = json::array();
    for (std::size_t g = 0; g < sw.grid.size(); ++g)
        summary.push_back({{"lambda", sw.grid[g]},
                           {"mean_mae_overall", sw.reports[g].mean_mae(Split::Overall)},
                           {"mean_mae_event", sw.reports[g].mean_mae(Split::EventDriven)}});
    io::write_file_atomic(out / "sweep.json",
                          json{{"points", summary},
                               {"validated_lambdas", sw.validated_lambdas},
                               {"max_fast_path_error", sw.max_fast_path_error}}
                                  .dump(2) +
                              "\n");
    man.set("grid", sw.grid);
    man.artifacts_under(out);
    man.write();
    std::cout << sweep_csv(sw);
    return 0;
}

void add_reasoner_flags(CLI::App* app, ReasonerFlags& rf) {
    auto* oracle = app->add_flag("--oracle", rf.oracle, "Use the deterministic rule-based reasoner (default)");
    app->add_flag("--remote", rf.remote, "Call the chat-completion endpoint from EVENTCAST_LLM_* variables")
        ->excludes(oracle);
    app->add_option("--template", rf.template_path, "Prompt template file");
    app->add_option("--audit", rf.audit_path, "Append every reasoning call to this JSONL file");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-aware demand forecasting"};
    app.require_subcommand(1);
    Common c;
    std::uint64_t seed_value = 0;
    double lambda_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Random seed")->capture_default_str();
    auto* lambda_opt = app.add_option("--lambda", lambda_value, "Blend weight on the trend head")
                           ->check(CLI::Range(0.0, 1.0));
    app.add_option("--config", c.config, "JSON config file");
    app.add_option("--out", c.out, "Output directory");
    app.add_flag("--strict", c.strict, "Fail on unknown countries and malformed records");
    app.fallthrough();

    ReasonerFlags rf;
    std::string data, db_dir, ckpt, country, region, date, grid, input;
    std::size_t k = kDefaultFieldCount;
    std::optional<double> effect_scale;
    bool no_events = false;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset and event database");
    gen->add_option("--effect-scale", effect_scale, "Scale applied to every planted event effect");

    auto* reason = app.add_subcommand("reason", "Reason over one country and date and print the summary");
    reason->add_option("--db", db_dir, "Event database directory")->required();
    reason->add_option("--country", country)->required();
    reason->add_option("--date", date)->required();
    add_reasoner_flags(reason, rf);

    auto* prompt = app.add_subcommand("prompt", "Print the rendered prompt for one country and date");
    prompt->add_option("--db", db_dir)->required();
    prompt->add_option("--country", country)->required();
    prompt->add_option("--date", date)->required();
    prompt->add_option("--template", rf.template_path);

    auto* parse = app.add_subcommand("parse", "Extract summary fields from a reasoning response");
    parse->add_option("input", input, "Response file, or - for stdin");
    parse->add_option("-k,--fields", k, "Expected field count")->capture_default_str();

    auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
    train_cmd->add_option("--data", data)->required();
    train_cmd->add_option("--db", db_dir)->required();
    train_cmd->add_flag("--no-events", no_events, "Replace every summary with padding");
    add_reasoner_flags(train_cmd, rf);

    auto* fc = app.add_subcommand("forecast", "Forecast the next horizons from one origin date");
    fc->add_option("--checkpoint", ckpt)->required();
    fc->add_option("--data", data)->required();
    fc->add_option("--db", db_dir)->required();
    fc->add_option("--country", country)->required();
    fc->add_option("--region", region)->required();
    fc->add_option("--origin", date)->required();
    add_reasoner_flags(fc, rf);

    auto* ev = app.add_subcommand("evaluate", "Score a checkpoint on the held-out dates");
    ev->add_option("--checkpoint", ckpt)->required();
    ev->add_option("--data", data)->required();
    ev->add_option("--db", db_dir)->required();
    add_reasoner_flags(ev, rf);

    auto* ab = app.add_subcommand("ablate", "Train with and without event features and compare");
    ab->add_option("--data", data)->required();
    ab->add_option("--db", db_dir)->required();
    add_reasoner_flags(ab, rf);

    auto* sw = app.add_subcommand("sweep-lambda", "Score a checkpoint across a grid of blend weights");
    sw->add_option("--checkpoint", ckpt)->required();
    sw->add_option("--data", data)->required();
    sw->add_option("--db", db_dir)->required();
    sw->add_option("--grid", grid, "Comma-separated lambda values (default 0,0.1,...,1)");
    add_reasoner_flags(sw, rf);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    if (*seed_opt) c.seed = seed_value;
    if (*lambda_opt) c.lambda = lambda_value;

    try {
        if (*gen) return cmd_gen_data(c, effect_scale);
        if (*reason) return cmd_reason(c, rf, db_dir, country, date);
        if (*prompt) return cmd_prompt(rf, c, db_dir, country, date);
        if (*parse) return cmd_parse(input, k);
        if (*train_cmd) return cmd_train(c, rf, data, db_dir, no_events);
        if (*fc) return cmd_forecast(c, rf, ckpt, data, db_dir, country, region, date);
        if (*ev) return cmd_evaluate(c, rf, ckpt, data, db_dir);
        if (*ab) return cmd_ablate(c, rf, data, db_dir);
        if (*sw) return cmd_sweep(c, rf, ckpt, data, db_dir, grid);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const RuntimeError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
