#pragma once

#include <json.hpp>

#include "bayesics/bma.hpp"
#include "bayesics/glm.hpp"
#include "bayesics/linear.hpp"
#include "bayesics/mediation.hpp"
#include "bayesics/npboot.hpp"
#include "bayesics/simple_tests.hpp"
#include "bayesics/summary.hpp"
#include "bayesics/survival.hpp"

namespace bayesics {

// Stable JSON views of the result types; ordered_json keeps field order
// deterministic so a fixed seed reproduces byte-identical reports.
using Json = nlohmann::ordered_json;

Json to_json(const RopeBounds& rope);
Json to_json(const InferenceSummary& s);
Json to_json(const BayesFactor& bf);
Json to_json(const SamplePlan& plan);
Json to_json(const DiagnosticsData& d);
Json to_json(const CredibleBand& band);
Json to_json(const GroupPosterior& g);
Json to_json(const AnovaFit& fit);
Json to_json(const TTestResult& r);
Json to_json(const PropTestResult& r);
Json to_json(const PoissonTestResult& r);
Json to_json(const SignTestResult& r);
Json to_json(const ChisqTestResult& r);
Json to_json(const CaseControlResult& r);
Json to_json(const SurvivalCurve& c);
Json to_json(const PiecewiseExpModel& m);
Json to_json(const NpGlmFit& fit);
Json to_json(const BmaFit& fit);
Json to_json(const MediationResult& r);
Json to_json(const InfoCriteria& ic);
Json to_json(const BayesianPValue& pv);

}  // namespace bayesics
