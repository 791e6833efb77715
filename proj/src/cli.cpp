#include "chromatwin/cli.hpp"

#include "chromatwin/errors.hpp"
#include "chromatwin/image.hpp"
#include "chromatwin/json_codec.hpp"
#include "chromatwin/service.hpp"
#include "chromatwin/twin_sim.hpp"
#include "chromatwin/vision.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace chromatwin::cli {

using nlohmann::json;

namespace {

// Error raised for a failed remote call; carries the exit code to use.
class RemoteError : public Error {
public:
    RemoteError(const std::string& msg, int code, std::string kind)
        : Error(msg), code_(code), kind_(std::move(kind)) {}
    int code() const { return code_; }
    const std::string& kind() const { return kind_; }

private:
    int code_;
    std::string kind_;
};

struct Options {
    std::string data_dir;
    std::string url;
    std::string format = "text";
    std::uint64_t seed = 0;
    int max_drops = kDefaultMaxDrops;
    bool no_noise = false;
    bool fixed_hyper = false;
};

struct GeometryFlags {
    vision::TemplateGeometry g = vision::TemplateGeometry::standard();

    void add(CLI::App* cmd) {
        cmd->add_option("--width", g.width, "Template width in pixels");
        cmd->add_option("--height", g.height, "Template height in pixels");
        cmd->add_option("--marker-size", g.marker_size, "Marker side in pixels");
        cmd->add_option("--marker-margin", g.marker_margin, "Gap between page edge and marker");
        cmd->add_option("--roi-fraction", g.roi_fraction, "ROI side as a fraction of the container");
    }
};

struct FilterFlags {
    std::string contributor, institution, campaign, source;
    std::optional<std::int64_t> since, until;

    void add(CLI::App* cmd) {
        cmd->add_option("--contributor", contributor, "Only records from this contributor");
        cmd->add_option("--institution", institution, "Only records from this institution");
        cmd->add_option("--campaign", campaign, "Only records with this campaign tag");
        cmd->add_option("--since", since, "Earliest timestamp (UTC seconds, inclusive)");
        cmd->add_option("--until", until, "Latest timestamp (UTC seconds, inclusive)");
        cmd->add_option("--source", source, "image | direct-rgb | simulated");
    }

    RecordFilter filter() const {
        RecordFilter f;
        if (!contributor.empty()) f.contributor = contributor;
        if (!institution.empty()) f.institution = institution;
        if (!campaign.empty()) f.campaign_tag = campaign;
        f.since = since;
        f.until = until;
        if (!source.empty()) f.source = parse_record_source(source);
        return f;
    }
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string data_dir(const Options& o) {
    if (!o.data_dir.empty()) return o.data_dir;
    if (auto env = data_dir_from_env()) return *env;
    throw ValidationError("no data directory: pass --data-dir or set CHROMATWIN_DATA_DIR", {"data-dir"});
}

Store open_store(const Options& o) { return Store::open(data_dir(o), {}, o.max_drops); }

// --- remote mode -----------------------------------------------------------

std::unique_ptr<httplib::Client> client(const Options& o) {
    auto c = std::make_unique<httplib::Client>(o.url);
    if (!c->is_valid()) throw ValidationError("invalid service URL: " + o.url, {"url"});
    c->set_read_timeout(600, 0);
    return c;
}

json check_response(const httplib::Result& res) {
    if (!res) throw RemoteError("service unreachable: " + httplib::to_string(res.error()), kStorage, "storage");
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::exception&) {
        if (res->status == 200) throw RemoteError("service returned malformed JSON", kStorage, "storage");
        throw RemoteError("service returned HTTP " + std::to_string(res->status), kStorage, "storage");
    }
    if (res->status == 200) return body;
    const std::string kind = body.value("error", "internal");
    const std::string msg = body.value("message", "HTTP " + std::to_string(res->status));
    int code = kStorage;
    if (res->status == 400) code = kUsage;
    if (res->status == 422) code = kVision;
    if (res->status == 409 || kind == "model") code = kModel;
    if (res->status == 422 && body.contains("markers_found"))
        throw RemoteError(msg + " (markers found: " + std::to_string(body["markers_found"].get<int>()) + ")", code, kind);
    throw RemoteError(msg, code, kind);
}

// --- output ----------------------------------------------------------------

void print_scored_text(std::ostream& out, const char* label, const ScoredRecipe& s) {
    out << label << format_recipe(s.recipe) << "  predicted " << format_color(s.predicted.mean) << "  sd "
        << fmt("%.2f", s.predicted.stddev[0]) << ' ' << fmt("%.2f", s.predicted.stddev[1]) << ' '
        << fmt("%.2f", s.predicted.stddev[2]) << "  score " << fmt("%.6g", s.score);
    if (s.already_tested) out << "  [repeat: already tested]";
    out << '\n';
}

void print_suggestion(std::ostream& out, const std::string& format, const TargetColor& t, const SuggestionPair& s) {
    if (format == "json") {
        out << suggestion_to_json(s).dump(2) << '\n';
    } else if (format == "csv") {
        out << "kind,red,yellow,blue,green,pred_r,pred_g,pred_b,sd_r,sd_g,sd_b,score,already_tested\n";
        for (const auto& [kind, sc] : {std::pair{"optimal", &s.optimal}, std::pair{"exploration", &s.exploration}}) {
            out << kind << ',' << sc->recipe.red << ',' << sc->recipe.yellow << ',' << sc->recipe.blue << ','
                << sc->recipe.green;
            for (int ch = 0; ch < 3; ++ch) out << ',' << fmt("%.17g", sc->predicted.mean[ch]);
            for (int ch = 0; ch < 3; ++ch) out << ',' << fmt("%.17g", sc->predicted.stddev[static_cast<std::size_t>(ch)]);
            out << ',' << fmt("%.17g", sc->score) << ',' << (sc->already_tested ? "true" : "false") << '\n';
        }
    } else {
        out << "target " << format_color(t.rgb()) << "  (trained on " << s.training_size << " records)\n";
        print_scored_text(out, "optimal      ", s.optimal);
        print_scored_text(out, "exploration  ", s.exploration);
    }
}

void print_repeat(std::ostream& out, const Recipe& r, const std::vector<std::uint64_t>& ids) {
    if (ids.empty()) return;
    out << "repeat: recipe " << format_recipe(r) << " was already recorded (id";
    if (ids.size() > 1) out << 's';
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? ", " : " ") << ids[i];
    out << ")\n";
}

// --- commands --------------------------------------------------------------

int cmd_template(const std::string& path, const vision::TemplateGeometry& g, const std::string& fill,
                 std::ostream& out) {
    Image img = fill.empty() ? vision::generate_template(g) : [&] {
        const ColorRGB c = TargetColor(parse_color(fill).r, parse_color(fill).g, parse_color(fill).b).rgb();
        return vision::render_sample(g, {static_cast<std::uint8_t>(std::lround(c.r)),
                                         static_cast<std::uint8_t>(std::lround(c.g)),
                                         static_cast<std::uint8_t>(std::lround(c.b))});
    }();
    save_image(img, path);
    const auto roi = g.roi();
    out << "wrote " << path << " (" << g.width << "x" << g.height << ", roi " << roi.x << ',' << roi.y << ' '
        << roi.width << 'x' << roi.height << ")\n";
    return kOk;
}

int cmd_ingest(const Options& o, const std::string& image_path, const NewRecord& meta,
               const vision::TemplateGeometry& g, std::ostream& out) {
    const auto bytes = read_file(image_path);
    std::uint64_t id = 0;
    ColorRGB rgb;
    json diag;
    std::vector<std::uint64_t> repeats;
    if (!o.url.empty()) {
        httplib::MultipartFormDataItems items = {
            {"image", std::string(bytes.begin(), bytes.end()), std::filesystem::path(image_path).filename().string(),
             "application/octet-stream"},
            {"recipe", format_recipe(meta.recipe), "", ""},
            {"contributor", meta.contributor, "", ""},
            {"institution", meta.institution, "", ""},
        };
        if (meta.campaign_tag) items.push_back({"campaign_tag", *meta.campaign_tag, "", ""});
        const json body = check_response(client(o)->Post("/ingest", items));
        id = body.at("id").get<std::uint64_t>();
        const auto m = body.at("measured_rgb");
        rgb = {m[0].get<double>(), m[1].get<double>(), m[2].get<double>()};
        diag = body.at("diagnostics");
        repeats = body.at("repeat_of").get<std::vector<std::uint64_t>>();
    } else {
        Store store = open_store(o);
        const auto res = ingest_photo(store, bytes, meta, g);
        id = res.submitted.id;
        rgb = res.measurement.rgb;
        diag = diagnostics_to_json(res.measurement.diagnostics);
        repeats = res.submitted.repeats;
    }
    if (o.format == "json") {
        out << json{{"id", id}, {"measured_rgb", {rgb.r, rgb.g, rgb.b}}, {"diagnostics", diag},
                    {"repeat", !repeats.empty()}, {"repeat_of", repeats}}
                   .dump(2)
            << '\n';
        return kOk;
    }
    out << "id " << id << '\n'
        << "measured " << format_color(rgb) << '\n'
        << "markers " << diag["markers_found"].get<int>() << "  reprojection_rms "
        << fmt("%.3f", diag["reprojection_rms"].get<double>()) << "  roi_pixels "
        << diag["roi_pixels"].get<std::size_t>() << '\n';
    print_repeat(out, meta.recipe, repeats);
    return kOk;
}

int cmd_submit(const Options& o, const NewRecord& rec, std::ostream& out) {
    SubmitOutcome res;
    if (!o.url.empty()) {
        json j = {{"red", rec.recipe.red}, {"yellow", rec.recipe.yellow}, {"blue", rec.recipe.blue},
                  {"green", rec.recipe.green}, {"r", rec.measured.r},    {"g", rec.measured.g},
                  {"b", rec.measured.b}, {"contributor", rec.contributor}, {"institution", rec.institution},
                  {"source", std::string(to_string(rec.source))}};
        if (rec.campaign_tag) j["campaign_tag"] = *rec.campaign_tag;
        const json body = check_response(client(o)->Post("/records", j.dump(), "application/json"));
        res.id = body.at("id").get<std::uint64_t>();
        res.repeats = body.at("repeat_of").get<std::vector<std::uint64_t>>();
    } else {
        Store store = open_store(o);
        res = submit_with_repeats(store, rec);
    }
    out << "id " << res.id << '\n';
    print_repeat(out, rec.recipe, res.repeats);
    return kOk;
}

int cmd_suggest(const Options& o, const SuggestRequest& req, std::ostream& out) {
    SuggestionPair s;
    if (!o.url.empty()) {
        s = suggestion_from_json(check_response(
            client(o)->Post("/suggest", suggest_request_to_json(req).dump(), "application/json")));
    } else {
        s = suggest_from_store(open_store(o), req);
    }
    print_suggestion(out, o.format, req.target, s);
    return kOk;
}

httplib::Params filter_params(const RecordFilter& f) {
    httplib::Params params;
    const json fj = filter_to_json(f);
    for (auto it = fj.begin(); it != fj.end(); ++it)
        params.emplace(it.key(), it->is_string() ? it->get<std::string>() : it->dump());
    return params;
}

int cmd_export(const Options& o, const RecordFilter& f, const std::string& path, std::ostream& out);

int cmd_records(const Options& o, const RecordFilter& f, std::ostream& out) {
    if (o.format == "csv") return cmd_export(o, f, "", out);
    std::vector<ExperimentRecord> records;
    if (!o.url.empty()) {
        const auto params = filter_params(f);
        const json body = check_response(client(o)->Get("/records", params, httplib::Headers{}));
        for (const auto& r : body) records.push_back(record_from_json(r));
    } else {
        records = open_store(o).query(f);
    }
    if (o.format == "json") {
        json arr = json::array();
        for (const auto& r : records) arr.push_back(record_to_json(r));
        out << arr.dump(2) << '\n';
    } else {
        for (const auto& r : records) {
            out << r.id << "  " << format_recipe(r.recipe) << "  " << format_color(r.measured) << "  "
                << r.contributor << " (" << r.institution << ")  " << to_string(r.source);
            if (r.campaign_tag) out << "  [" << *r.campaign_tag << ']';
            out << '\n';
        }
    }
    return kOk;
}

int cmd_simulate(const Options& o, const Recipe& r, int repeats, std::ostream& out) {
    OracleConfig cfg;
    cfg.seed = o.seed;
    cfg.noise = !o.no_noise;
    FrugalTwin twin(cfg);
    for (int i = 0; i < repeats; ++i) {
        const ColorRGB c = twin.measure(r);
        if (o.format == "json")
            out << json{{"recipe", format_recipe(r)}, {"rgb", {c.r, c.g, c.b}}}.dump() << '\n';
        else if (o.format == "csv")
            out << (i == 0 ? "red,yellow,blue,green,r,g,b\n" : "") << format_recipe(r) << ',' << fmt("%.17g", c.r)
                << ',' << fmt("%.17g", c.g) << ',' << fmt("%.17g", c.b) << '\n';
        else
            out << format_color(c) << '\n';
    }
    return kOk;
}

int cmd_campaign(const Options& o, const std::string& mode, const std::vector<std::string>& target_texts,
                 int iterations, bool explore, const std::string& csv_path, std::ostream& out) {
    if (iterations < 0) throw ValidationError("iterations must be non-negative", {"iterations"});
    OracleConfig oracle;
    oracle.seed = o.seed;
    oracle.noise = !o.no_noise;
    CampaignPolicy policy;
    policy.execute_exploration = explore;
    policy.max_drops = o.max_drops;
    if (o.fixed_hyper) policy.hyper = HyperPolicy::fixed_defaults();

    std::vector<NamedTarget> targets;
    if (target_texts.empty()) {
        targets.assign(default_targets().begin(), default_targets().end());
    } else {
        for (std::size_t i = 0; i < target_texts.size(); ++i) {
            const ColorRGB c = parse_color(target_texts[i]);
            targets.push_back({"Scientist " + std::to_string(i + 1), target_texts[i], TargetColor(c.r, c.g, c.b)});
        }
    }

    std::vector<CampaignResult> solo, collab;
    if (mode == "solo" || mode == "both")
        for (const auto& t : targets)
            solo.push_back(run_solo_campaign(t.target, iterations, oracle, policy, t.agent + " solo"));
    if (mode == "collab" || mode == "both") {
        if (targets.size() != 4) throw ValidationError("collaborative campaigns need exactly four targets", {"target"});
        const auto res = run_collaborative_campaign(
            {targets[0].target, targets[1].target, targets[2].target, targets[3].target}, iterations, oracle, policy);
        collab.assign(res.begin(), res.end());
    }

    std::vector<CampaignResult> all = solo;
    all.insert(all.end(), collab.begin(), collab.end());
    if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        if (!f) throw StorageError("cannot write " + csv_path);
        write_campaign_csv(f, all);
        if (!f) throw StorageError("write failed for " + csv_path);
    }
    if (o.format == "csv") {
        write_campaign_csv(out, all);
        return kOk;
    }
    if (o.format == "json") {
        json arr = json::array();
        for (const auto& r : all)
            arr.push_back({{"agent", r.agent},
                           {"target_rgb", {r.target[0], r.target[1], r.target[2]}},
                           {"best_error", r.best_error_series()},
                           {"final_best_error", r.final_best_error()}});
        out << arr.dump(2) << '\n';
        return kOk;
    }
    for (const auto& r : all)
        out << r.agent << "  target " << format_color(r.target.rgb()) << "  final best error "
            << fmt("%.3f", r.final_best_error()) << '\n';
    if (!solo.empty() && !collab.empty()) {
        std::vector<CampaignComparison> cmp;
        for (std::size_t i = 0; i < solo.size(); ++i) cmp.push_back(compare_campaigns(solo[i], collab[i]));
        write_comparison_table(out, cmp);
    }
    return kOk;
}

Service* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service) g_service->stop();
}

int cmd_serve(const Options& o, const std::string& host, int port, std::ostream& out) {
    Store store = open_store(o);
    Service service(store);
    const int bound = service.bind(host, port);
    out << "listening on http://" << host << ':' << bound << " (data " << data_dir(o) << ", " << store.size()
        << " records)\n"
        << std::flush;
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.run();
    g_service = nullptr;
    return kOk;
}

int cmd_export(const Options& o, const RecordFilter& f, const std::string& path, std::ostream& out) {
    std::string csv;
    if (!o.url.empty()) {
        const auto res = client(o)->Get("/export.csv", filter_params(f), httplib::Headers{});
        if (!res) throw RemoteError("service unreachable: " + httplib::to_string(res.error()), kStorage, "storage");
        if (res->status != 200) check_response(res);
        csv = res->body;
    } else {
        csv = open_store(o).export_csv(f);
    }
    if (path.empty() || path == "-") {
        out << csv;
    } else {
        write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
        out << "wrote " << path << '\n';
    }
    return kOk;
}

int cmd_import(const Options& o, const std::string& path, std::ostream& out) {
    const auto bytes = read_file(path);
    Store store = open_store(o);
    const std::size_t n = store.import_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    out << "imported " << n << " records\n";
    return kOk;
}

std::string error_kind(const std::exception& e, int& code) {
    if (const auto* r = dynamic_cast<const RemoteError*>(&e)) {
        code = r->code();
        return r->kind();
    }
    if (const auto* v = dynamic_cast<const VisionRejection*>(&e)) {
        code = kVision;
        return "vision markers_found=" + std::to_string(v->markers_found());
    }
    if (dynamic_cast<const ValidationError*>(&e)) {
        code = kUsage;
        return "validation";
    }
    if (dynamic_cast<const StorageError*>(&e)) {
        code = kStorage;
        return "storage";
    }
    if (dynamic_cast<const EmptyDatasetError*>(&e)) {
        code = kModel;
        return "empty_dataset";
    }
    if (dynamic_cast<const FactorizationError*>(&e)) {
        code = kModel;
        return "model";
    }
    code = kStorage;
    return "internal";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"chromatwin: collaborative dye-mixing lab, GP recipe suggestions and a simulated twin"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--data-dir", o.data_dir, "Store directory (default: $CHROMATWIN_DATA_DIR)");
    app.add_option("--url", o.url, "Use a running service instead of a local store");
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "csv", "json"}));
    app.add_option("--seed", o.seed, "Seed for all simulated randomness");
    app.add_option("--max-drops", o.max_drops, "Largest drop count per dye")->check(CLI::Range(1, 1000));
    app.add_flag("--no-noise", o.no_noise, "Disable simulated measurement noise");
    app.add_flag("--fixed-hyper", o.fixed_hyper, "Use the fixed default kernel instead of likelihood selection");

    GeometryFlags tgeom;
    std::string template_out, template_fill;
    auto* tmpl = app.add_subcommand("template", "Write a printable template image (.png or .ppm)");
    tmpl->add_option("out", template_out, "Output path")->required();
    tmpl->add_option("--fill", template_fill, "Fill the container with R,G,B (synthetic sample photo)");
    tgeom.add(tmpl);

    GeometryFlags igeom;
    std::string ingest_image, ingest_recipe, ingest_campaign;
    NewRecord meta;
    auto* ingest = app.add_subcommand("ingest", "Measure a template photo and store it");
    ingest->add_option("image", ingest_image, "Photo of the filled template")->required();
    ingest->add_option("--recipe", ingest_recipe, "Drops as red,yellow,blue,green")->required();
    ingest->add_option("--contributor", meta.contributor, "Contributor name")->required();
    ingest->add_option("--institution", meta.institution, "Contributor institution")->required();
    ingest->add_option("--campaign", ingest_campaign, "Campaign tag");
    igeom.add(ingest);

    std::string submit_recipe, submit_rgb, submit_campaign, submit_source = "direct-rgb";
    NewRecord srec;
    auto* submit = app.add_subcommand("submit", "Store a directly measured RGB value");
    submit->add_option("--recipe", submit_recipe, "Drops as red,yellow,blue,green")->required();
    submit->add_option("--rgb", submit_rgb, "Measured color as R,G,B")->required();
    submit->add_option("--contributor", srec.contributor, "Contributor name")->required();
    submit->add_option("--institution", srec.institution, "Contributor institution")->required();
    submit->add_option("--campaign", submit_campaign, "Campaign tag");
    submit->add_option("--source", submit_source, "direct-rgb | simulated");

    std::string suggest_target;
    FilterFlags sfilter;
    auto* sug = app.add_subcommand("suggest", "Suggest optimal and exploration recipes for a target");
    sug->add_option("--target", suggest_target, "Target color as R,G,B")->required();
    sfilter.add(sug);

    FilterFlags rfilter;
    auto* recs = app.add_subcommand("records", "List stored records");
    rfilter.add(recs);

    std::string sim_recipe;
    int sim_repeats = 1;
    auto* sim = app.add_subcommand("simulate", "Measure a recipe on the simulated twin");
    sim->add_option("--recipe", sim_recipe, "Drops as red,yellow,blue,green")->required();
    sim->add_option("--repeat", sim_repeats, "Number of noisy draws")->check(CLI::PositiveNumber);

    std::string camp_mode = "both", camp_csv;
    std::vector<std::string> camp_targets;
    int camp_iters = 10;
    bool camp_explore = false;
    auto* camp = app.add_subcommand("campaign", "Run simulated solo and/or collaborative campaigns");
    camp->add_option("--mode", camp_mode, "solo | collab | both")->check(CLI::IsMember({"solo", "collab", "both"}));
    camp->add_option("--target", camp_targets, "Target R,G,B (repeat; default: the four team colors)");
    camp->add_option("--iterations", camp_iters, "Suggestions per agent");
    camp->add_flag("--explore", camp_explore, "Execute the exploration recipe instead of the optimal one");
    camp->add_option("--csv", camp_csv, "Also write per-step CSV to this path");

    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service over the store");
    serve->add_option("--port", serve_port, "TCP port (0 picks a free one)");
    serve->add_option("--host", serve_host, "Bind address");

    std::string export_out;
    FilterFlags efilter;
    auto* exp = app.add_subcommand("export", "Export records as CSV");
    exp->add_option("--out", export_out, "Output file (default stdout)");
    efilter.add(exp);

    std::string import_path;
    auto* imp = app.add_subcommand("import", "Import records from an exported CSV");
    imp->add_option("csv", import_path, "CSV file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "error: usage: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (!o.data_dir.empty() && !o.url.empty())
            throw ValidationError("--data-dir and --url are mutually exclusive", {"data-dir", "url"});
        if (tmpl->parsed()) {
            tgeom.g.validate();
            return cmd_template(template_out, tgeom.g, template_fill, out);
        }
        if (ingest->parsed()) {
            meta.recipe = parse_recipe(ingest_recipe);
            if (!ingest_campaign.empty()) meta.campaign_tag = ingest_campaign;
            igeom.g.validate();
            return cmd_ingest(o, ingest_image, meta, igeom.g, out);
        }
        if (submit->parsed()) {
            srec.recipe = parse_recipe(submit_recipe);
            srec.measured = parse_color(submit_rgb);
            srec.source = parse_record_source(submit_source);
            if (srec.source == RecordSource::Image)
                throw ValidationError("use the ingest command for image records", {"source"});
            if (!submit_campaign.empty()) srec.campaign_tag = submit_campaign;
            return cmd_submit(o, srec, out);
        }
        if (sug->parsed()) {
            SuggestRequest req;
            const ColorRGB c = parse_color(suggest_target);
            req.target = TargetColor(c.r, c.g, c.b);
            req.filter = sfilter.filter();
            req.max_drops = o.max_drops;
            if (o.fixed_hyper) req.hyper = HyperPolicy::fixed_defaults();
            return cmd_suggest(o, req, out);
        }
        if (recs->parsed()) return cmd_records(o, rfilter.filter(), out);
        if (sim->parsed()) return cmd_simulate(o, parse_recipe(sim_recipe), sim_repeats, out);
        if (camp->parsed()) return cmd_campaign(o, camp_mode, camp_targets, camp_iters, camp_explore, camp_csv, out);
        if (serve->parsed()) return cmd_serve(o, serve_host, serve_port, out);
        if (exp->parsed()) return cmd_export(o, efilter.filter(), export_out, out);
        if (imp->parsed()) return cmd_import(o, import_path, out);
    } catch (const std::exception& e) {
        int code = kStorage;
        const std::string kind = error_kind(e, code);
        std::string msg = e.what();
        for (auto& ch : msg)
            if (ch == '\n') ch = ' ';
        err << "error: " << kind << ": " << msg << '\n';
        return code;
    }
    return kUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

} // namespace chromatwin::cli
