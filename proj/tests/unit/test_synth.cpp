// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "csiarm/error.hpp"
#include "csiarm/synth/channel.hpp"
#include "csiarm/synth/corpus.hpp"
#include "csiarm/synth/trajectory.hpp"

using namespace csiarm;
using namespace csiarm::synth;

namespace {

SceneConfig bare_scene() {
  SceneConfig s = default_scene();
  s.static_scatterers.clear();
  s.noise_std = 0.0;
  return s;
}

std::vector<double> amplitude_series(const SceneConfig& scene, const Trajectory& tr, std::size_t n, double rate,
                                     std::size_t tone) {
  const auto f = subcarrier_frequencies(scene);
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto sc = trajectory_at(tr, static_cast<double>(i) / rate);
    out.push_back(std::abs(channel_response_exact(scene, sc, f)[tone]));
  }
  return out;
}

// Pearson correlation of x[i] and x[i + lag] over the overlap.
double lag_correlation(const std::vector<double>& x, std::size_t lag) {
  const std::size_t n = x.size() - lag;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) ma += x[i], mb += x[i + lag];
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x[i] - ma, b = x[i + lag] - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Trajectory, SilenceIsConstant) {
  const Trajectory tr = make_trajectory(ActionClass::Silence, default_scene().robot_base);
  const auto a = trajectory_at(tr, 0.0), b = trajectory_at(tr, 7.3);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].position, b[i].position);
}

TEST(Trajectory, CirclePeriodIsFifteenSeconds) {
  EXPECT_EQ(default_period(ActionClass::Circle), 15.0);
  const Trajectory tr = make_trajectory(ActionClass::Circle, default_scene().robot_base);
  const auto a = trajectory_at(tr, 0.0), b = trajectory_at(tr, 15.0);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].position, b[i].position);
  const auto c = trajectory_at(tr, 7.5);
  EXPECT_GT(distance(a[kEndEffector].position, c[kEndEffector].position), 0.1);
}

TEST(Trajectory, ElbowHoldsTheEndEffector) {
  const Trajectory tr = make_trajectory(ActionClass::Elbow, default_scene().robot_base);
  const auto p0 = trajectory_at(tr, 0.0);
  for (double t : {1.0, 2.0, 3.0, 5.0}) {
    const auto p = trajectory_at(tr, t);
    EXPECT_EQ(p[kEndEffector].position, p0[kEndEffector].position);
  }
  EXPECT_NE(trajectory_at(tr, 1.0)[kMidLink].position, p0[kMidLink].position);
}

TEST(Trajectory, EveryMotionIsPeriodic) {
  for (ActionClass a : kAllActions) {
    const Trajectory tr = make_trajectory(a, default_scene().robot_base);
    for (double t : {0.3, 1.7, 4.2, 11.9}) {
      const auto p = trajectory_at(tr, t), q = trajectory_at(tr, t + tr.period_s);
      for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LT(distance(p[i].position, q[i].position), 1e-9);
    }
  }
}

TEST(Trajectory, RejectsNegativeTimeAndPeriod) {
  const Trajectory tr = make_trajectory(ActionClass::Arc, default_scene().robot_base);
  EXPECT_THROW(trajectory_at(tr, -1.0), Error);
  EXPECT_THROW(make_trajectory(ActionClass::Arc, {}, 0.0), Error);
}

TEST(Channel, SubcarrierGrid) {
  const SceneConfig s = default_scene();
  const auto f = subcarrier_frequencies(s);
  ASSERT_EQ(f.size(), 256u);
  EXPECT_DOUBLE_EQ(f[128], 5.18e9);
  EXPECT_DOUBLE_EQ(f[0], 5.18e9 - 128 * 312500.0);
  EXPECT_DOUBLE_EQ(f[255], 5.18e9 + 127 * 312500.0);
}

TEST(Channel, DirectPathAloneIsFlat) {
  const SceneConfig s = bare_scene();
  const auto h = channel_response_exact(s, {}, subcarrier_frequencies(s));
  const double expect = 1.0 / distance(s.tx_pos, s.rx_pos);
  for (const auto& v : h) EXPECT_NEAR(std::abs(v), expect, 1e-12);
}

TEST(Channel, TwoPathRippleMatchesClosedForm) {
  SceneConfig s = bare_scene();
  const Scatterer sc{{2.0, 3.5, 1.0}, 0.7};
  s.static_scatterers = {sc};
  const double d0 = distance(s.tx_pos, s.rx_pos);
  const double d1 = distance(s.tx_pos, sc.position) + distance(sc.position, s.rx_pos);
  const double a0 = 1.0 / d0, a1 = sc.reflectivity / d1;
  const double dtau = (d1 - d0) / kSpeedOfLight;

  const auto f = subcarrier_frequencies(s);
  const auto h = channel_response_exact(s, {}, f);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double closed = a0 * a0 + a1 * a1 + 2.0 * a0 * a1 * std::cos(2.0 * std::numbers::pi * f[k] * dtau);
    EXPECT_NEAR(std::norm(h[k]), closed, 1e-9 * closed);
  }
  // Shifting every tone by 1/dtau leaves |H|^2 unchanged.
  std::vector<double> shifted(f);
  for (double& v : shifted) v += 1.0 / dtau;
  const auto h2 = channel_response_exact(s, {}, shifted);
  for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(std::norm(h2[k]), std::norm(h[k]), 1e-9 * std::norm(h[k]));
}

TEST(Channel, ObstacleScalesDirectPathByConfiguredGain) {
  SceneConfig s = bare_scene();
  const auto f = subcarrier_frequencies(s);
  const double clear = std::abs(channel_response_exact(s, {}, f)[0]);
  s.obstacle = default_obstacle(s);
  ASSERT_TRUE(s.obstacle->intersects_segment(s.tx_pos, s.rx_pos));
  const double blocked = std::abs(channel_response_exact(s, {}, f)[0]);
  EXPECT_NEAR(blocked / clear, std::pow(10.0, -15.0 / 20.0), 1e-12);
  EXPECT_NEAR(obstacle_gain(s), std::pow(10.0, -15.0 / 20.0), 1e-15);
}

TEST(Channel, DefaultObstacleDimensions) {
  const Box b = default_obstacle(default_scene());
  const Vec3 sz = b.size();
  EXPECT_NEAR(sz.x, 0.10, 1e-12);
  EXPECT_NEAR(sz.y, 0.20, 1e-12);
  EXPECT_NEAR(sz.z, 1.00, 1e-12);
}

TEST(Channel, NlosLowersTotalPower) {
  SceneConfig s = default_scene();
  s.noise_std = 0.0;
  const auto f = subcarrier_frequencies(s);
  for (ActionClass a : kAllActions) {
    const auto sc = trajectory_at(make_trajectory(a, s.robot_base), 1.3);
    double clear = 0.0, blocked = 0.0;
    for (const auto& v : channel_response_exact(s, sc, f)) clear += std::norm(v);
    SceneConfig o = s;
    o.obstacle = default_obstacle(s);
    for (const auto& v : channel_response_exact(o, sc, f)) blocked += std::norm(v);
    EXPECT_LT(blocked, clear) << to_string(a);
  }
}

TEST(Channel, DegenerateGeometry) {
  SceneConfig s = bare_scene();
  const auto f = subcarrier_frequencies(s);
  const Scatterer on_tx{s.tx_pos, 0.5};
  EXPECT_THROW(channel_response_exact(s, std::span<const Scatterer>(&on_tx, 1), f), Error);
  s.rx_pos = s.tx_pos;
  EXPECT_THROW(channel_response_exact(s, {}, f), Error);
}

TEST(Scene, ValidateRejectsBadConfigs) {
  SceneConfig s = default_scene();
  EXPECT_NO_THROW(validate(s));
  s.noise_std = -1.0;
  EXPECT_THROW(validate(s), Error);
  s = default_scene();
  s.static_scatterers.push_back({{1, 1, 1}, 1.5});
  EXPECT_THROW(validate(s), Error);
  s = default_scene();
  s.rx_pos = s.tx_pos;
  EXPECT_THROW(validate(s), Error);
}

TEST(Scene, DefaultNoiseIsFivePercentOfDirectAmplitude) {
  const SceneConfig s = default_scene();
  EXPECT_NEAR(s.noise_std, 0.05 / distance(s.tx_pos, s.rx_pos), 1e-15);
}

TEST(Generate, ShapeAndMetadata) {
  SceneConfig s = default_scene();
  const CsiRecording rec = generate_recording(s, make_trajectory(ActionClass::Arc, s.robot_base), 10000, 30.0);
  EXPECT_EQ(rec.packets(), 10000u);
  EXPECT_EQ(rec.label, ActionClass::Arc);
  EXPECT_NEAR(rec.frames.back().timestamp, 9999.0 / 30.0, 1e-9);
  EXPECT_EQ(rec.frames[0].subcarriers.size(), 256u);
  EXPECT_NO_THROW(validate(rec));
}

TEST(Generate, NoiselessSilenceFramesAreIdentical) {
  SceneConfig s = default_scene();
  s.noise_std = 0.0;
  const CsiRecording rec = generate_recording(s, make_trajectory(ActionClass::Silence, s.robot_base), 500, 30.0);
  for (const auto& f : rec.frames) ASSERT_EQ(f.subcarriers, rec.frames[0].subcarriers);
}

TEST(Generate, SeededDeterminism) {
  SceneConfig s = default_scene();
  const Trajectory tr = make_trajectory(ActionClass::Circle, s.robot_base);
  const CsiRecording a = generate_recording(s, tr, 200, 30.0);
  EXPECT_EQ(generate_recording(s, tr, 200, 30.0), a);
  s.seed = 99;
  EXPECT_NE(generate_recording(s, tr, 200, 30.0), a);
}

TEST(Generate, NoiseHasConfiguredStd) {
  SceneConfig s = bare_scene();
  s.noise_std = 0.01;
  const CsiRecording rec = generate_recording(s, make_trajectory(ActionClass::Silence, s.robot_base), 400, 30.0);
  SceneConfig clean = s;
  clean.noise_std = 0.0;
  const auto h = channel_response(clean, trajectory_at(make_trajectory(ActionClass::Silence, s.robot_base), 0.0),
                                  subcarrier_frequencies(s));
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : rec.frames) {
    for (std::size_t k = 0; k < 256; ++k) {
      const double dr = f.subcarriers[k].re - h[k].re, di = f.subcarriers[k].im - h[k].im;
      sum += dr * dr + di * di;
      ++n;
    }
  }
  EXPECT_NEAR(std::sqrt(sum / static_cast<double>(n)), 0.01, 0.0005);
}

TEST(Generate, ArgumentChecks) {
  SceneConfig s = default_scene();
  const Trajectory tr = make_trajectory(ActionClass::Arc, s.robot_base);
  EXPECT_THROW(generate_recording(s, tr, 0, 30.0), Error);
  EXPECT_THROW(generate_recording(s, tr, 10, 0.0), Error);
}

TEST(Generate, DistinctActionsGiveDistinctAmplitudesWithoutNoise) {
  SceneConfig s = default_scene();
  s.noise_std = 0.0;
  std::vector<std::vector<double>> amps;
  for (ActionClass a : kAllActions) {
    const CsiRecording rec = generate_recording(s, make_trajectory(a, s.robot_base), 450, 30.0);
    std::vector<double> v;
    for (const auto& f : rec.frames) {
      for (const auto& c : f.subcarriers) v.push_back(std::hypot(c.re, c.im));
    }
    amps.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < amps.size(); ++i) {
    for (std::size_t j = i + 1; j < amps.size(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < amps[i].size(); ++k) d += (amps[i][k] - amps[j][k]) * (amps[i][k] - amps[j][k]);
      EXPECT_GT(std::sqrt(d), 0.0) << i << " vs " << j;
    }
  }
}

TEST(Generate, AmplitudeSeriesPeakAtTheTrajectoryPeriod) {
  SceneConfig s = default_scene();
  s.noise_std = 0.0;
  const double rate = 30.0;
  for (ActionClass a : {ActionClass::Arc, ActionClass::Elbow, ActionClass::Circle}) {
    const Trajectory tr = make_trajectory(a, s.robot_base);
    const auto lag = static_cast<std::size_t>(std::lround(tr.period_s * rate));
    const auto x = amplitude_series(s, tr, 3 * lag, rate, 40);
    EXPECT_GT(lag_correlation(x, lag), 0.999999) << to_string(a);
    for (std::size_t l = lag / 8; l <= 7 * lag / 8; ++l) EXPECT_LT(lag_correlation(x, l), 0.99) << to_string(a) << " lag " << l;
  }
  const auto still = amplitude_series(s, make_trajectory(ActionClass::Silence, s.robot_base), 50, rate, 40);
  for (double v : still) EXPECT_EQ(v, still[0]);
}

// ----------------------------------------------------------------- corpus

TEST(Corpus, DefaultPlanGivesSixteenLosAndFourNlosCells) {
  const CorpusPlan plan;
  const auto cells = plan_cells(plan);
  ASSERT_EQ(cells.size(), 20u);
  EXPECT_EQ(std::count_if(cells.begin(), cells.end(), [](const CorpusCell& c) { return c.los; }), 16);
  for (const auto& c : cells) {
    if (!c.los) EXPECT_EQ(c.scenario, 2);
  }
}

TEST(Corpus, ScenarioOffsetsAreTwelveCentimetres) {
  const SceneConfig base = default_scene();
  const CorpusPlan plan;
  for (int s = 1; s <= 4; ++s) {
    const SceneConfig sc = scene_for_cell(base, plan, {s, ActionClass::Arc, true, 0});
    EXPECT_NEAR(distance(sc.rx_pos, base.rx_pos), 0.12 * (s - 1), 1e-12);
    EXPECT_FALSE(sc.obstacle.has_value());
  }
  const SceneConfig n = scene_for_cell(base, plan, {2, ActionClass::Arc, false, 0});
  ASSERT_TRUE(n.obstacle.has_value());
}

TEST(Corpus, NlosOnlyPlan) {
  CorpusPlan plan;
  plan.scenarios = {2};
  plan.los = false;
  plan.nlos_scenarios = {2};
  plan.packets = 20;
  const auto recs = generate_corpus(default_scene(), plan);
  ASSERT_EQ(recs.size(), 4u);
  for (const auto& r : recs) {
    EXPECT_FALSE(r.los);
    EXPECT_EQ(r.scenario_id, 2);
  }
}

TEST(Corpus, EmptyPlanGivesNothing) {
  CorpusPlan plan;
  plan.scenarios.clear();
  plan.nlos_scenarios.clear();
  EXPECT_TRUE(generate_corpus(default_scene(), plan).empty());
}

TEST(Corpus, GenerationIsScheduleIndependent) {
  CorpusPlan plan;
  plan.packets = 30;
  const auto one = generate_corpus(default_scene(), plan, 1);
  const auto four = generate_corpus(default_scene(), plan, 4);
  EXPECT_EQ(one, four);
}

TEST(Corpus, FileNames) {
  EXPECT_EQ(recording_file_name({3, ActionClass::Circle, true, 0}), "circle_3_los_0.csir");
  EXPECT_EQ(recording_file_name({2, ActionClass::Silence, false, 1}), "silence_2_nlos_1.csir");
}

TEST(CorpusPlan, ParseFormatRoundTrip) {
  const std::string text =
      "# comment\n"
      "scenarios = 1, 3\n"
      "actions = arc, silence\n"
      "los = true\n"
      "nlos_scenarios = 3\n"
      "packets = 600\n"
      "rate = 25\n"
      "seed = 42\n"
      "noise_std = 0.002\n"
      "recordings_per_cell = 2\n";
  const CorpusPlan p = parse_corpus_plan(text);
  EXPECT_EQ(p.scenarios, (std::vector<int>{1, 3}));
  EXPECT_EQ(p.actions, (std::vector<ActionClass>{ActionClass::Arc, ActionClass::Silence}));
  EXPECT_EQ(p.packets, 600u);
  EXPECT_EQ(p.rate_hz, 25.0);
  EXPECT_EQ(p.seed, 42u);
  ASSERT_TRUE(p.noise_std.has_value());
  EXPECT_EQ(*p.noise_std, 0.002);
  EXPECT_EQ(p.recordings_per_cell, 2);
  const CorpusPlan q = parse_corpus_plan(format_corpus_plan(p));
  EXPECT_EQ(format_corpus_plan(q), format_corpus_plan(p));
  EXPECT_EQ(plan_cells(p).size(), (2u * 2u + 2u) * 2u);
}

TEST(CorpusPlan, ErrorsNameKeyAndLine) {
  try {
    parse_corpus_plan("scenarios = 1\npackets = lots\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadPlan);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("packets"), std::string::npos);
  }
  EXPECT_THROW(parse_corpus_plan("colour = red\n"), Error);
  EXPECT_THROW(parse_corpus_plan("scenarios = 5\n"), Error);
  EXPECT_THROW(parse_corpus_plan("actions = wave\n"), Error);
  EXPECT_THROW(parse_corpus_plan("just text\n"), Error);
}
