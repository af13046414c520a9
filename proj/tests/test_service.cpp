#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "intervalrisk/service_http.hpp"
#include "test_util.hpp"

using namespace intervalrisk;
namespace fs = std::filesystem;

namespace {

StudyConfig service_study() {
    return make_study_config("svc", {{"A1", "attack", HopKind::attack}, {"E1", "evade", HopKind::evade}});
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("intervalrisk_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

json attack_batch(const std::string& expert, double base) {
    json recs = json::array();
    for (const char* a : {"c", "t", "f", "a", "d", "r", "g", "o"})
        recs.push_back({{"hop_id", "A1"}, {"attribute", a}, {"lower", base}, {"upper", base + 12.5}});
    return {{"expert_id", expert}, {"records", recs}, {"client_timestamp", "2024-01-01T00:00:00Z"}};
}

std::size_t line_count(const fs::path& p) {
    if (!fs::exists(p)) return 0;
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

/// Server bound to an ephemeral port, stopped on destruction.
struct RunningServer {
    std::unique_ptr<httplib::Server> server;
    std::thread thread;
    int port = 0;

    RunningServer(StudyService& svc, std::string token = {}) : server(make_http_server(svc, std::move(token))) {
        port = server->bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server->listen_after_bind(); });
        server->wait_until_ready();
    }
    ~RunningServer() {
        server->stop();
        thread.join();
    }
    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

}  // namespace

TEST(Service, StudyEndpoint) {
    StudyService svc(service_study(), fresh_dir("study"));
    RunningServer rs(svc);
    auto res = rs.client().Get("/api/study");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(study_from_json(json::parse(res->body)), service_study());
}

TEST(Service, NoStudyLoaded) {
    StudyService svc(std::nullopt, fresh_dir("nostudy"));
    EXPECT_ERROR_CODE(svc.get_study(), ErrorCode::NoStudyLoaded);
    RunningServer rs(svc);
    auto res = rs.client().Get("/api/study");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
}

TEST(Service, ValidBatchAppendsEveryRecord) {
    auto dir = fresh_dir("append");
    StudyService svc(service_study(), dir);
    RunningServer rs(svc);
    auto res = rs.client().Post("/api/responses", attack_batch("x", 20).dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    EXPECT_EQ(json::parse(res->body).at("accepted").get<int>(), 8);
    EXPECT_EQ(line_count(svc.log_path()), 8u);
    res = rs.client().Post("/api/responses", attack_batch("y", 30).dump(), "application/json");
    EXPECT_EQ(line_count(svc.log_path()), 16u);
    fs::remove_all(dir);
}

TEST(Service, InvalidBatchPersistsNothing) {
    auto dir = fresh_dir("reject");
    StudyService svc(service_study(), dir);
    RunningServer rs(svc);
    auto batch = attack_batch("x", 20);
    batch["records"][3]["lower"] = 90;
    batch["records"][3]["upper"] = 10;
    batch["records"].push_back({{"hop_id", "E1"}, {"attribute", "g"}, {"lower", 1}, {"upper", 2}});
    batch["records"].push_back({{"hop_id", "ZZ"}, {"attribute", "c"}, {"lower", 1}, {"upper", 2}});
    auto res = rs.client().Post("/api/responses", batch.dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);
    auto body = json::parse(res->body);
    EXPECT_EQ(body.at("error"), "ValidationFailed");
    const auto& v = body.at("violations");
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0].at("index"), 3);
    EXPECT_EQ(v[0].at("code"), "MalformedInterval");
    EXPECT_EQ(v[1].at("code"), "IllegalAttribute");
    EXPECT_EQ(v[2].at("code"), "UnknownHop");
    EXPECT_EQ(line_count(svc.log_path()), 0u);

    res = rs.client().Post("/api/responses", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(line_count(svc.log_path()), 0u);
    fs::remove_all(dir);
}

TEST(Service, ExportDeduplicatesLatestWins) {
    auto dir = fresh_dir("dedup");
    StudyService svc(service_study(), dir);
    RunningServer rs(svc);
    auto cli = rs.client();
    EXPECT_EQ(cli.Get("/api/export?format=csv")->status, 404);
    cli.Post("/api/responses", attack_batch("x", 20).dump(), "application/json");
    cli.Post("/api/responses", attack_batch("x", 40).dump(), "application/json");
    EXPECT_EQ(line_count(svc.log_path()), 16u);
    auto res = cli.Get("/api/export?format=jsonl");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    auto recs = parse_records_jsonl(res->body).records;
    ASSERT_EQ(recs.size(), 8u);
    for (const auto& r : recs) EXPECT_EQ(r.interval, (Interval{40, 52.5}));
    res = cli.Get("/api/export?format=csv");
    ASSERT_TRUE(res);
    EXPECT_EQ(parse_records_csv(res->body).records, recs);
    EXPECT_EQ(cli.Get("/api/export?format=xml")->status, 400);
    fs::remove_all(dir);
}

TEST(Service, SubmittedValuesExportBitExact) {
    auto dir = fresh_dir("exact");
    StudyService svc(service_study(), dir);
    RunningServer rs(svc);
    json batch{{"expert_id", "x"},
               {"records",
                {{{"hop_id", "E1"}, {"attribute", "c"}, {"lower", 0.1}, {"upper", 1.0 / 3.0}},
                 {{"hop_id", "E1"}, {"attribute", "o"}, {"lower", 33.333333333333336}, {"upper", 99.99999999999999}}}}};
    rs.client().Post("/api/responses", batch.dump(), "application/json");
    for (const char* fmt : {"csv", "jsonl"}) {
        auto res = rs.client().Get((std::string("/api/export?format=") + fmt).c_str());
        ASSERT_TRUE(res);
        auto recs = std::string(fmt) == "csv" ? parse_records_csv(res->body).records
                                              : parse_records_jsonl(res->body).records;
        ASSERT_EQ(recs.size(), 2u);
        EXPECT_EQ(recs[0].interval.lower, 0.1);
        EXPECT_EQ(recs[0].interval.upper, 1.0 / 3.0);
        EXPECT_EQ(recs[1].interval.lower, 33.333333333333336);
        EXPECT_EQ(recs[1].interval.upper, 99.99999999999999);
    }
    fs::remove_all(dir);
}

TEST(Service, BearerTokenRequiredWhenConfigured) {
    auto dir = fresh_dir("auth");
    StudyService svc(service_study(), dir);
    RunningServer rs(svc, "s3cret");
    auto cli = rs.client();
    EXPECT_EQ(cli.Post("/api/responses", attack_batch("x", 1).dump(), "application/json")->status, 401);
    EXPECT_EQ(cli.Get("/api/export")->status, 401);
    EXPECT_EQ(cli.Get("/api/study")->status, 200);
    httplib::Headers h{{"Authorization", "Bearer s3cret"}};
    EXPECT_EQ(cli.Post("/api/responses", h, attack_batch("x", 1).dump(), "application/json")->status, 201);
    EXPECT_EQ(cli.Get("/api/export", h)->status, 200);
    fs::remove_all(dir);
}

TEST(Service, TrailingPartialLineIgnored) {
    auto dir = fresh_dir("partial");
    StudyService svc(service_study(), dir);
    SubmissionBatch b{"x", {{"A1", "c", 1, 2}}, ""};
    svc.post_responses(b);
    {
        std::ofstream out(svc.log_path(), std::ios::app);
        out << R"({"expert_id":"y","hop_id":"A1","attri)";
    }
    EXPECT_EQ(svc.read_log().size(), 1u);
    EXPECT_ERROR_CODE(StudyService(service_study(), fresh_dir("empty")).export_responses(ExportFormat::csv),
                      ErrorCode::EmptyLog);
    fs::remove_all(dir);
}

TEST(Service, TimestampsStrictlyIncrease) {
    auto dir = fresh_dir("stamps");
    StudyService svc(service_study(), dir);
    for (int i = 0; i < 20; ++i) svc.post_responses({"x", {{"A1", "c", 1, 2}}, ""});
    auto log = svc.read_log();
    for (std::size_t i = 1; i < log.size(); ++i) EXPECT_LT(log[i - 1].submitted_at, log[i].submitted_at);
    fs::remove_all(dir);
}
