#include <gtest/gtest.h>

#include "collab/network.hpp"
#include "collab/network_json.hpp"
#include "fixtures.hpp"

using namespace collab;
using namespace collab::testing;

namespace {

bool has_kind(const std::vector<Violation>& vs, ViolationKind k) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == k; });
}

std::vector<std::vector<int>> resource_sets(const NetworkSpec& s) {
  std::vector<std::vector<int>> out;
  for (const auto& jt : s.job_types) out.push_back(jt.resources);
  return out;
}

}  // namespace

TEST(Validate, TwoResourceNetworkIsValid) {
  EXPECT_TRUE(validate(two_resource()).empty());
}

TEST(Validate, ZeroColumnIsReported) {
  auto s = two_resource();
  s.job_types[1].resources.clear();
  const auto vs = validate(s);
  EXPECT_TRUE(has_kind(vs, ViolationKind::JobTypeWithoutResource));
  EXPECT_TRUE(has_errors(vs));
}

TEST(Validate, IdenticalRowsAreNested) {
  // both resources serve exactly the same job types
  auto s = network(2, {job({0, 1}), job({0, 1})});
  const auto vs = validate(s);
  ASSERT_TRUE(has_kind(vs, ViolationKind::NestedResourcePair));
  const long nested = std::count_if(vs.begin(), vs.end(),
                                    [](const Violation& v) { return v.kind == ViolationKind::NestedResourcePair; });
  EXPECT_EQ(nested, 1);
}

TEST(Validate, StrictlyNestedRowsAreReported) {
  // J_1 = {0} is inside J_0 = {0, 1}
  auto s = network(2, {job({0, 1}), job({0})});
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::NestedResourcePair));
}

TEST(Validate, ResourceWithoutJobTypeAndBadIndex) {
  auto s = network(3, {job({0}), job({1})});
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::ResourceWithoutJobType));
  s.job_types[1].resources = {5};
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::ResourceIndexOutOfRange));
}

TEST(Validate, RatesCostsAndDistributions) {
  auto s = single(1.0, 0.0);
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::NonPositiveServiceRate));
  s = single(-1.0, 1.0);
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::NegativeArrivalRate));
  s = single(1.0, 1.0, 0.0);
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::NonPositiveHoldingCost));
  s = single(1.0, 2.0);
  s.job_types[0].service_cv = 0.5;
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::DistributionCvMismatch));
  s.job_types[0].service_dist = DistKind::gamma;
  EXPECT_FALSE(has_errors(validate(s)));
  s.job_types[0].service_dist = DistKind::deterministic;
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::DistributionCvMismatch));
}

TEST(Validate, ZeroArrivalRateIsOnlyAWarning) {
  const auto vs = validate(single(0.0, 2.0));
  ASSERT_TRUE(has_kind(vs, ViolationKind::ZeroArrivalRate));
  EXPECT_FALSE(has_errors(vs));
}

TEST(Validate, EmptyHeavySet) {
  auto s = two_resource();
  s.heavy_set = std::vector<int>{};
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::EmptyHeavySet));
  s.heavy_set = std::vector<int>{7};
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::HeavySetOutOfRange));
  // derived heavy set: loads 0.7 are below the 0.9 default threshold
  s.heavy_set.reset();
  EXPECT_TRUE(has_kind(validate(s), ViolationKind::EmptyHeavySet));
  s.heavy_threshold = 0.6;
  EXPECT_FALSE(has_errors(validate(s)));
}

TEST(Validate, DisconnectedIsAWarning) {
  auto s = network(2, {job({0}), job({1})}, std::vector<int>{0, 1});
  const auto vs = validate(s);
  EXPECT_TRUE(has_kind(vs, ViolationKind::Disconnected));
  EXPECT_FALSE(has_errors(vs));
}

TEST(Architecture, TwoResourceIsHierarchical) {
  const auto r = analyze_architecture(two_resource());
  EXPECT_TRUE(r.is_hierarchical);
  EXPECT_TRUE(r.is_connected);
  ASSERT_EQ(r.levels.size(), 2u);
  EXPECT_EQ(r.levels[0].num_resources, 2);
  EXPECT_EQ(r.levels[0].job_types, std::vector<int>{0});
  EXPECT_EQ(r.levels[1].job_types, (std::vector<int>{1, 2}));
  EXPECT_EQ(r.jobs_of[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(r.jobs_of[1], (std::vector<int>{0, 2}));
}

TEST(Architecture, TriangleIsNotHierarchical) {
  EXPECT_FALSE(analyze_architecture(triangle()).is_hierarchical);
}

TEST(Architecture, SingleTypeSingleResource) {
  const auto r = analyze_architecture(single(0.5, 2.0));
  EXPECT_TRUE(r.is_hierarchical);
  EXPECT_DOUBLE_EQ(r.loads[0], 0.25);
}

TEST(Architecture, MixedJobTypesMeetHeavyAndLight) {
  // resource 0 heavy; type 0 spans both, type 1 heavy only, type 2 light only
  auto s = network(2, {job({0, 1}, 0.5), job({0}, 0.45), job({1}, 0.1)});
  const auto r = analyze_architecture(s);
  EXPECT_EQ(r.heavy_resources, std::vector<int>{0});
  EXPECT_EQ(r.light_resources, std::vector<int>{1});
  EXPECT_EQ(r.heavy_job_types, (std::vector<int>{0, 1}));
  EXPECT_EQ(r.light_job_types, std::vector<int>{2});
  EXPECT_EQ(r.mixed_job_types, std::vector<int>{0});
}

TEST(Loads, HandSums) {
  auto l = loads(two_resource(0.5, 2.0));
  EXPECT_DOUBLE_EQ(l[0], 0.5);
  EXPECT_DOUBLE_EQ(l[1], 0.5);
  l = loads(two_resource(0.99, 2.0));
  EXPECT_DOUBLE_EQ(l[0], 0.99);
  EXPECT_DOUBLE_EQ(l[1], 0.99);
  EXPECT_DOUBLE_EQ(loads(single(3.0, 3.0))[0], 1.0);
}

TEST(Workload, HandSums) {
  const auto s = two_resource(0.7, 2.0);
  const auto w = workload(s, std::vector<long>{2, 4, 6});
  EXPECT_DOUBLE_EQ(w[0], 3.0);
  EXPECT_DOUBLE_EQ(w[1], 4.0);
  EXPECT_EQ(workload(s, std::vector<long>{0, 0, 0}), (std::vector<double>{0, 0}));
  EXPECT_DOUBLE_EQ(workload(single(1, 4), std::vector<long>{6})[0], 1.5);
}

TEST(Hypothetical, TriangleBecomesSingleStation) {
  const auto z = forced_idle_sets(triangle());
  EXPECT_EQ(z[0], bit(2));
  EXPECT_EQ(z[1], bit(1));
  EXPECT_EQ(z[2], bit(0));
  const auto h = hypothetical_network(triangle());
  for (const auto& set : resource_sets(h)) EXPECT_EQ(set, (std::vector<int>{0, 1, 2}));
  EXPECT_TRUE(is_hierarchical(h));
}

TEST(Hypothetical, FourTypeChainFollowsDeclaredOrder) {
  const auto s = four_type_capacity_loss();
  EXPECT_FALSE(is_hierarchical(s));
  const auto z = forced_idle_sets(s);
  EXPECT_EQ(z[0], 0u);
  EXPECT_EQ(z[1], bit(2));
  EXPECT_EQ(z[2], bit(1));
  EXPECT_EQ(z[3], 0u);
  const auto h = hypothetical_network(s);
  EXPECT_EQ(resource_sets(h),
            (std::vector<std::vector<int>>{{0}, {0, 1, 2}, {0, 1, 2}, {1, 2}}));
  EXPECT_TRUE(is_hierarchical(h));
}

TEST(Hypothetical, EarlierTypesClaimSharedForcedIdleResources) {
  // Z_0 = Z_1 = {2}: only the first type absorbs resource 2
  auto s = network(3, {job({0, 1}), job({0}), job({1}), job({2, 0})});
  const auto z = forced_idle_sets(s);
  ASSERT_EQ(z[0], bit(2));
  const auto h = hypothetical_network(s);
  EXPECT_EQ(h.job_types[0].resources, (std::vector<int>{0, 1, 2}));
  for (int j = 1; j < 4; ++j) {
    if (z[j] & bit(2)) {
      EXPECT_EQ(h.job_types[j].resources, s.job_types[j].resources);
    }
  }
}

TEST(Hypothetical, HierarchicalIsUnchanged) {
  const auto s = two_resource();
  for (ResourceMask z : forced_idle_sets(s)) EXPECT_EQ(z, 0u);
  EXPECT_EQ(to_json(hypothetical_network(s)), to_json(s));
  std::mt19937_64 rng(5);
  for (int n = 0; n < 20; ++n) {
    const auto r = random_hierarchical(rng, 2 + n % 5);
    EXPECT_EQ(to_json(hypothetical_network(r)), to_json(r));
  }
}

TEST(Hypothetical, K4EdgesHasNoForcedIdleButIsNotHierarchical) {
  const auto s = k4_edges();
  EXPECT_FALSE(is_hierarchical(s));
  for (ResourceMask z : forced_idle_sets(s)) EXPECT_EQ(z, 0u);
  const auto h = hypothetical_network(s);
  EXPECT_EQ(to_json(h), to_json(s));
  EXPECT_FALSE(analyze_architecture(h).is_hierarchical);
}

TEST(Hierarchical, EveryResourceHasAPrivateJobType) {
  std::mt19937_64 rng(17);
  for (int n = 0; n < 50; ++n) {
    const auto s = random_hierarchical(rng, 1 + n % 7);
    ASSERT_TRUE(is_hierarchical(s));
    ASSERT_FALSE(has_errors(validate(s)));
    EXPECT_EQ(resources_with_private_job(s).size(), static_cast<std::size_t>(s.num_resources));
  }
}

TEST(Json, RoundTripKeepsFieldNames) {
  const std::string text = R"({
    "num_resources": 2,
    "heavy_set": [0, 1],
    "job_types": [
      {"arrival_rate": 0.7, "service_rate": 2, "holding_cost": 1, "arrival_cv": 1, "service_cv": 0.5,
       "arrival_dist": "exponential", "service_dist": "gamma", "resources": [1, 0, 1]},
      {"arrival_rate": 0.7, "service_rate": 2, "service_dist": "deterministic", "resources": [0]},
      {"arrival_rate": 0.7, "service_rate": 2, "resources": [1]}
    ]
  })";
  const auto s = parse_network(text);
  EXPECT_EQ(s.job_types[0].resources, (std::vector<int>{0, 1}));
  EXPECT_EQ(s.job_types[0].service_dist, DistKind::gamma);
  EXPECT_DOUBLE_EQ(s.job_types[0].service_cv, 0.5);
  EXPECT_DOUBLE_EQ(s.job_types[1].service_cv, 0.0);
  EXPECT_DOUBLE_EQ(s.job_types[2].holding_cost, 1.0);
  EXPECT_TRUE(validate(s).empty());
  const auto again = network_from_json(to_json(s));
  EXPECT_EQ(to_json(again), to_json(s));
}

TEST(Json, MalformedReportsLine) {
  try {
    parse_network("{\n  \"num_resources\": 2,\n  \"job_types\": [ oops ]\n}");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_network(R"({"num_resources": 1, "job_types": [{"service_rate": 1}]})"), Error);
  EXPECT_THROW(parse_network(R"({"num_resources": 1, "job_types": [{"arrival_rate": 1, "service_rate": 1,
      "resources": [0], "service_dist": "weibull"}]})"),
               Error);
}

TEST(Json, ConfigFilesParse) {
  for (const char* name : {"two_resource_collab.json", "pairwise_triangle.json", "capacity_loss_four_types.json",
                           "k4_edges.json", "mm1.json", "idle.json"}) {
    const auto s = load_network(std::string(COLLAB_CONFIG_DIR) + "/" + name);
    EXPECT_FALSE(has_errors(validate(s))) << name;
  }
}
