#include <gtest/gtest.h>

#include "intervalrisk/simulate.hpp"
#include "test_util.hpp"

using namespace intervalrisk;

namespace {

SimulationSpec small_spec() {
    SimulationSpec s;
    s.seed = 42;
    s.kind = HopKind::attack;
    s.n_experts = 6;
    s.n_hops = 4;
    s.true_beta = {{"d_m", 0.5}, {"a_w", -0.3}};
    s.true_beta_width = {{"c_m", 0.2}};
    s.sd_expert = 0.3;
    s.sd_hop = 0.2;
    s.sd_residual = 0.5;
    return s;
}

}  // namespace

TEST(Simulate, SameSeedSameRecords) {
    auto a = generate_panel(small_spec());
    auto b = generate_panel(small_spec());
    EXPECT_EQ(a, b);
    auto s = small_spec();
    s.seed = 43;
    EXPECT_NE(a, generate_panel(s));
}

TEST(Simulate, PanelShapeAndValidity) {
    auto s = small_spec();
    auto recs = generate_panel(s);
    EXPECT_EQ(recs.size(), 6u * 4u * 8u);
    auto study = simulation_study(s);
    for (const auto& r : recs) {
        EXPECT_TRUE(validate_record(r, study)) << r.expert_id << " " << r.hop_id;
        EXPECT_EQ(r.submitted_at, kSimulationTimestamp);
    }
    auto ds = assemble_dataset(recs, study, s.kind);
    EXPECT_EQ(ds.size(), static_cast<std::size_t>(s.n_experts * s.n_hops));
    EXPECT_EQ(ds.rows.front().expert_id, "X001");
    EXPECT_EQ(ds.rows.front().hop_id, "A01");
}

TEST(Simulate, ZeroModelGivesConstantOutcome) {
    SimulationSpec s;
    s.seed = 3;
    s.kind = HopKind::evade;
    s.n_experts = 4;
    s.n_hops = 3;
    s.sd_residual = 0.0;
    auto recs = generate_panel(s);
    for (const auto& r : recs)
        if (r.attribute == Attribute::o) {
            EXPECT_DOUBLE_EQ(r.interval.midpoint(), kMidpointBackMap.mean);
            EXPECT_DOUBLE_EQ(r.interval.width(), kWidthBackMap.mean);
        }
}

TEST(Simulate, DropoutRemovesWholeCases) {
    auto s = small_spec();
    s.dropout = 0.3;
    auto recs = generate_panel(s);
    EXPECT_LT(recs.size(), 6u * 4u * 8u);
    auto ds = assemble_dataset(recs, simulation_study(s), s.kind);
    EXPECT_EQ(ds.size() * 8 + (6 * 4 - ds.size()) * 7, recs.size());
}

TEST(Simulate, SpecValidation) {
    auto s = small_spec();
    s.true_beta["g_m"] = 1.0;
    s.kind = HopKind::evade;
    EXPECT_ERROR_CODE(generate_panel(s), ErrorCode::InfeasibleSpec);
    s = small_spec();
    s.sd_hop = -1;
    EXPECT_ERROR_CODE(validate_spec(s), ErrorCode::InfeasibleSpec);
    s = small_spec();
    s.midpoint_lo = 60;
    s.midpoint_hi = 50;
    EXPECT_ERROR_CODE(validate_spec(s), ErrorCode::InfeasibleSpec);
    EXPECT_ERROR_CODE(spec_from_json(json{{"kind", "sideways"}}), ErrorCode::InfeasibleSpec);
}

TEST(Simulate, SpecJsonRoundTripAndSidecar) {
    auto s = small_spec();
    auto back = spec_from_json(spec_to_json(s));
    EXPECT_EQ(spec_to_json(back), spec_to_json(s));
    auto side = simulation_sidecar(s);
    EXPECT_EQ(side.at("true_beta").at("d_m").get<double>(), 0.5);
    EXPECT_EQ(side.at("sd_expert").get<double>(), 0.3);
    EXPECT_EQ(side.at("back_map").at("midpoint").at("sd").get<double>(), 15.0);
    EXPECT_TRUE(side.contains("predictor_scaling"));
}

TEST(Recovery, SingleRunReport) {
    auto s = small_spec();
    s.n_experts = 10;
    s.n_hops = 8;
    auto rep = recovery_report(s, 1);
    EXPECT_EQ(rep.n_runs, 1);
    ASSERT_EQ(rep.runs.size(), 1u);
    EXPECT_EQ(rep.terms.size(), 22u);
    EXPECT_EQ(rep.runs[0].assessed, 21u);
    ASSERT_TRUE(rep.find("d_m"));
    EXPECT_EQ(rep.find("d_m")->true_value, 0.5);
    EXPECT_EQ(rep.find("d_m")->empirical_se, 0.0);
    EXPECT_ERROR_CODE(recovery_report(s, 0), ErrorCode::InvalidArgument);
}
