#pragma once

// `intervalrisk validate|simulate|fit|stepwise|serve`
// Exit codes: 0 success, 1 validation failure, 2 fitting failure, 3 usage error.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "intervalrisk/report.hpp"
#include "intervalrisk/service_http.hpp"
#include "intervalrisk/simulate.hpp"

namespace intervalrisk::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kFitting = 2, kUsage = 3 };

struct Options {
    std::string data;
    std::string study;
    std::string spec;
    std::string kind = "attack";
    std::string outcome = "m";
    double alpha = 0.05;
    std::string format = "text";
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string host = "0.0.0.0";
    std::optional<int> port;
};

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::StorageFailure, path + ": cannot write");
    f << text;
}

/// Data file plus the study it is checked against (given, or inferred from hop_type).
struct LoadedStudy {
    LoadedRecords loaded;
    StudyConfig study;
};

inline LoadedStudy load_inputs(const Options& o, bool lenient) {
    if (o.data.empty()) throw Error(ErrorCode::InvalidArgument, "--data is required");
    LoadedStudy ls;
    ls.loaded = load_records(o.data, lenient);
    ls.study = o.study.empty() ? infer_study(ls.loaded) : load_study(o.study);
    return ls;
}

inline int fail(std::ostream& err, int code, const std::string& msg) {
    err << "error: " << msg << '\n';
    return code;
}

/// Runs validation on every record; returns the number of violations.
inline int cmd_validate(const Options& o, std::ostream& out) {
    auto ls = load_inputs(o, true);
    std::size_t violations = ls.loaded.issues.size();
    for (const auto& issue : ls.loaded.issues)
        out << o.data << ":" << issue.line << ": ParseError: " << issue.message << '\n';
    std::vector<ResponseRecord> good;
    for (std::size_t i = 0; i < ls.loaded.records.size(); ++i) {
        const auto& r = ls.loaded.records[i];
        if (auto v = validate_record(r, ls.study); !v) {
            ++violations;
            out << o.data << ":" << ls.loaded.lines[i] << ": " << to_string(v.code) << ": " << v.message << '\n';
        } else {
            good.push_back(r);
        }
    }
    out << ls.loaded.records.size() + ls.loaded.issues.size() << " records, " << violations << " violations\n";
    for (HopKind kind : {HopKind::attack, HopKind::evade}) {
        std::size_t complete = 0;
        try {
            complete = assemble_dataset(good, ls.study, kind).size();
        } catch (const Error&) {
        }
        out << "complete " << to_string(kind) << " cases: " << complete << '\n';
    }
    return violations == 0 ? kOk : kValidation;
}

inline DesignMatrix prepare_design(const Options& o) {
    const auto kind = parse_hop_kind(o.kind);
    const auto outcome = parse_outcome_kind(o.outcome);
    if (!kind || !outcome) throw Error(ErrorCode::InvalidArgument, "--kind must be attack|evade, --outcome m|w");
    auto ls = load_inputs(o, false);
    for (std::size_t i = 0; i < ls.loaded.records.size(); ++i)
        if (auto v = validate_record(ls.loaded.records[i], ls.study); !v)
            throw Error(v.code, o.data + ":" + std::to_string(ls.loaded.lines[i]) + ": " + v.message);
    const auto ds = assemble_dataset(ls.loaded.records, ls.study, *kind);
    return build_design(ds, *outcome);
}

inline ReportFormat report_format(const Options& o) {
    auto f = parse_report_format(o.format);
    if (!f) throw Error(ErrorCode::InvalidArgument, "--format must be text|markdown|csv|json");
    return *f;
}

inline int cmd_fit(const Options& o, std::ostream& out) {
    const auto fmt = report_format(o);
    const auto design = prepare_design(o);
    const auto model = fit_ml(design);
    write_output(o.out, render(make_report(model), fmt), out);
    return kOk;
}

inline int cmd_stepwise(const Options& o, std::ostream& out) {
    const auto fmt = report_format(o);
    if (!(o.alpha > 0 && o.alpha < 1)) throw Error(ErrorCode::InvalidArgument, "--alpha must lie in (0, 1)");
    const auto design = prepare_design(o);
    const auto trace = reduce(design, StepwiseConfig{o.alpha, 100});
    auto report = make_report(trace.final);
    const json tj = trace_to_json(trace);
    if (o.out.empty()) {
        report.trace = tj;
        out << render(report, fmt);
        return kOk;
    }
    write_output(o.out, render(report, fmt), out);
    write_output(o.out + ".trace.json", tj.dump(2) + "\n", out);
    write_output(o.out + ".trace.log", render_trace_log(tj), out);
    return kOk;
}

inline int cmd_simulate(const Options& o, std::ostream& out) {
    if (o.spec.empty()) throw Error(ErrorCode::InvalidArgument, "--spec is required");
    json j;
    try {
        j = json::parse(read_file(o.spec));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InfeasibleSpec, o.spec + ": " + e.what());
    }
    auto spec = spec_from_json(j);
    if (o.seed) spec.seed = *o.seed;
    const auto records = generate_panel(spec);
    const auto study = simulation_study(spec);
    const bool jsonl = o.format == "jsonl" ||
                       (o.out.size() > 6 && o.out.compare(o.out.size() - 6, 6, ".jsonl") == 0);
    const std::string body = jsonl ? write_records_jsonl(records, study) : write_records_csv(records, study);
    write_output(o.out, body, out);
    if (!o.out.empty()) {
        write_output(o.out + ".truth.json", simulation_sidecar(spec).dump(2) + "\n", out);
        write_output(o.out + ".study.json", study_to_json(study).dump(2) + "\n", out);
    }
    return kOk;
}

namespace detail {
inline httplib::Server*& active_server() {
    static httplib::Server* server = nullptr;
    return server;
}
inline std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}
}  // namespace detail

/// Study from --study or $STUDY_FILE; log under $DATA_DIR; optional $API_TOKEN.
inline int cmd_serve(const Options& o, std::ostream& out) {
    const std::string study_path = o.study.empty() ? detail::env_or("STUDY_FILE", "") : o.study;
    std::optional<StudyConfig> study;
    if (!study_path.empty()) study = load_study(study_path);
    const int port = o.port ? *o.port : std::atoi(detail::env_or("PORT", "8080").c_str());

    StudyService service(std::move(study), detail::env_or("DATA_DIR", "data"));
    auto server = make_http_server(service, detail::env_or("API_TOKEN", ""));
    detail::active_server() = server.get();
    auto stop = [](int) {
        if (auto* s = detail::active_server()) s->stop();
    };
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    out << "serving on " << o.host << ":" << port << " (log " << service.log_path().string() << ")" << std::endl;
    const bool ok = server->listen(o.host, port);
    detail::active_server() = nullptr;
    if (!ok) throw Error(ErrorCode::StorageFailure, "cannot bind port " + std::to_string(port));
    return kOk;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Interval-valued expert judgement analysis"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--data", o.data, "response records (.csv or .jsonl)");
        sub->add_option("--study", o.study, "study configuration JSON");
        sub->add_option("--out", o.out, "output path (default stdout)");
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--kind", o.kind, "attack|evade")->check(CLI::IsMember({"attack", "evade"}));
        sub->add_option("--outcome", o.outcome, "m|w")->check(CLI::IsMember({"m", "w"}));
        sub->add_option("--format", o.format, "text|markdown|csv|json")
            ->check(CLI::IsMember({"text", "markdown", "md", "csv", "json"}));
    };
    auto* validate = app.add_subcommand("validate", "check records against the study");
    add_common(validate);
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic panel");
    simulate->add_option("--spec", o.spec, "simulation spec JSON")->required();
    simulate->add_option("--out", o.out, "output path (default stdout)");
    simulate->add_option("--format", o.format, "csv|jsonl")->check(CLI::IsMember({"csv", "jsonl", "text"}));
    simulate->add_option("--seed", o.seed, "override the spec seed");
    auto* fit = app.add_subcommand("fit", "fit the all-terms model");
    add_common(fit);
    add_model(fit);
    auto* stepwise = app.add_subcommand("stepwise", "backwards elimination to a final model");
    add_common(stepwise);
    add_model(stepwise);
    stepwise->add_option("--alpha", o.alpha, "significance level");
    auto* serve = app.add_subcommand("serve", "run the collection service");
    serve->add_option("--study", o.study, "study configuration JSON (default $STUDY_FILE)");
    serve->add_option("--host", o.host, "bind address");
    serve->add_option("--port", o.port, "port (default $PORT or 8080)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return kUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(o, out);
        if (simulate->parsed()) return cmd_simulate(o, out);
        if (fit->parsed()) return cmd_fit(o, out);
        if (stepwise->parsed()) return cmd_stepwise(o, out);
        if (serve->parsed()) return cmd_serve(o, out);
    } catch (const Error& e) {
        switch (e.code()) {
            case ErrorCode::InvalidArgument: return fail(err, kUsage, e.what());
            case ErrorCode::ParseError:
            case ErrorCode::UnknownHop:
            case ErrorCode::IllegalAttribute:
            case ErrorCode::MalformedInterval:
            case ErrorCode::EmptyDataset:
            case ErrorCode::InfeasibleSpec:
            case ErrorCode::StorageFailure: return fail(err, kValidation, e.what());
            default: return fail(err, kFitting, e.what());
        }
    }
    return kUsage;
}

}  // namespace intervalrisk::cli
