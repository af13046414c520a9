#pragma once

// HTTP binding of StudyService:
//   GET  /api/study                      study config (JSON)
//   POST /api/responses                  SubmissionBatch -> 201 {"accepted": n} | 422 {"violations": [...]}
//   GET  /api/export?format=csv|jsonl    deduplicated responses
// POST and export require "Authorization: Bearer <token>" when a token is set.

#include <memory>
#include <string>

#include <httplib.h>

#include "intervalrisk/service.hpp"

namespace intervalrisk {

inline std::unique_ptr<httplib::Server> make_http_server(StudyService& service, std::string api_token = {}) {
    auto srv = std::make_unique<httplib::Server>();

    auto send_json = [](httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    auto authorized = [token = std::move(api_token)](const httplib::Request& req) {
        if (token.empty()) return true;
        return req.get_header_value("Authorization") == "Bearer " + token;
    };

    srv->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    srv->Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv->Get("/api/study", [&service, send_json](const httplib::Request&, httplib::Response& res) {
        try {
            send_json(res, 200, study_to_json(service.get_study()));
        } catch (const Error& e) {
            send_json(res, 503, {{"error", to_string(e.code())}, {"message", e.what()}});
        }
    });

    srv->Post("/api/responses", [&service, send_json, authorized](const httplib::Request& req,
                                                                    httplib::Response& res) {
        if (!authorized(req)) return send_json(res, 401, {{"error", "Unauthorized"}});
        try {
            const auto batch = batch_from_json(json::parse(req.body));
            const auto n = service.post_responses(batch);
            send_json(res, 201, {{"accepted", n}});
        } catch (const ValidationError& e) {
            json v = json::array();
            for (const auto& x : e.violations())
                v.push_back({{"index", x.index}, {"code", to_string(x.code)}, {"message", x.message}});
            send_json(res, 422, {{"error", "ValidationFailed"}, {"violations", v}});
        } catch (const json::exception& e) {
            send_json(res, 400, {{"error", "ParseError"}, {"message", e.what()}});
        } catch (const Error& e) {
            const int status = e.code() == ErrorCode::ParseError     ? 400
                               : e.code() == ErrorCode::NoStudyLoaded ? 503
                                                                      : 500;
            send_json(res, status, {{"error", to_string(e.code())}, {"message", e.what()}});
        }
    });

    srv->Get("/api/export", [&service, send_json, authorized](const httplib::Request& req, httplib::Response& res) {
        if (!authorized(req)) return send_json(res, 401, {{"error", "Unauthorized"}});
        const std::string fmt = req.has_param("format") ? req.get_param_value("format") : "csv";
        if (fmt != "csv" && fmt != "jsonl")
            return send_json(res, 400, {{"error", "BadRequest"}, {"message", "format must be csv or jsonl"}});
        try {
            const bool csv = fmt == "csv";
            res.set_content(service.export_responses(csv ? ExportFormat::csv : ExportFormat::jsonl),
                            csv ? "text/csv" : "application/x-ndjson");
        } catch (const Error& e) {
            send_json(res, e.code() == ErrorCode::EmptyLog ? 404 : 500,
                      {{"error", to_string(e.code())}, {"message", e.what()}});
        }
    });
    return srv;
}

}  // namespace intervalrisk
