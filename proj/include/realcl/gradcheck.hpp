#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "realcl/fused.hpp"
#include "realcl/loss.hpp"
#include "realcl/model.hpp"
#include "realcl/numeric.hpp"
#include "realcl/rng.hpp"

namespace realcl {

/// Central finite differences against the analytic gradients, parameter by
/// parameter. The probe touches only the loss-value path, never the
/// backward code it checks. Error is |analytic - fd| relative to the larger
/// magnitude, with an absolute floor of 1 so near-zero gradients compare
/// absolutely.
struct GradCheckReport {
  int checked = 0;
  double max_rel_err = 0.0;
  std::size_t worst_param = 0;
  bool pass = true;
};

inline GradCheckReport gradcheck_loss(const ModelParams& params,
                                      const std::vector<FeatureVec>& views,
                                      const std::vector<Label>& labels,
                                      const std::vector<FusedPositive>& fused_pos,
                                      const std::vector<FusedNegative>& fused_neg,
                                      LossKind kind, const LossConfig& loss_cfg,
                                      double step = 1e-5, double tol = 1e-4) {
  const auto analytic =
      loss_gradients(params, views, labels, fused_pos, fused_neg, kind, loss_cfg);
  GradCheckReport report;
  ModelParams probe = params;
  for (std::size_t i = 0; i < probe.data.size(); ++i) {
    const double saved = probe.data[i];
    probe.data[i] = saved + step;
    const double up =
        loss_value(probe, views, labels, fused_pos, fused_neg, kind, loss_cfg);
    probe.data[i] = saved - step;
    const double down =
        loss_value(probe, views, labels, fused_pos, fused_neg, kind, loss_cfg);
    probe.data[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double g = analytic.grads[i];
    const double denom = std::max({std::abs(g), std::abs(fd), 1.0});
    const double rel = std::abs(g - fd) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_param = i;
    }
    ++report.checked;
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

/// One randomized gradcheck scenario: a small model with generic-position
/// parameters, a 4-view two-pair batch and (for the margin loss) fused
/// constants. Flags vary with the seed so every loss-config branch is hit.
struct GradCheckCase {
  ModelParams params;
  std::vector<FeatureVec> views;
  std::vector<Label> labels;
  std::vector<FusedPositive> fused_pos;
  std::vector<FusedNegative> fused_neg;
  LossConfig loss_cfg;
};

inline GradCheckCase make_gradcheck_case(std::uint64_t seed, LossKind kind,
                                         const LossConfig& base_cfg) {
  SeededRng rng(seed);
  ModelConfig mc;
  mc.encoder_dims = {6, 8, 6};
  mc.projector_dims = {6, 6, 4};
  GradCheckCase c;
  c.params = init_params(mc, rng);
  for (auto& p : c.params.data) p = rng.uniform(-0.8, 0.8);
  for (int i = 0; i < 4; ++i) {
    FeatureVec x(mc.input_dim());
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    c.views.push_back(std::move(x));
    c.labels.push_back(i % 2 == 0 ? Label::Real : Label::Fake);
  }
  c.loss_cfg = base_cfg;
  if (kind == LossKind::SupconMargin) {
    auto random_unit = [&] {
      FeatureVec v(mc.proj_dim());
      for (auto& x : v) x = rng.normal();
      return l2_normalize(v);
    };
    c.fused_pos.push_back({random_unit(), Label::Real});
    c.fused_pos.push_back({random_unit(), Label::Fake});
    for (int v = 0; v < 3; ++v) {
      c.fused_neg.push_back({random_unit(), 0.5});
    }
    switch (seed % 3) {
      case 0: c.loss_cfg.fused_negative_mode = FusedNegativeMode::Margin; break;
      case 1: c.loss_cfg.fused_negative_mode = FusedNegativeMode::AsFakes; break;
      default: c.loss_cfg.fused_negative_mode = FusedNegativeMode::Off; break;
    }
    c.loss_cfg.positive_set_extension =
        seed % 2 == 0 ? PositiveSetExtension::ClassFiltered
                      : PositiveSetExtension::LiteralUnion;
    c.loss_cfg.literal_normalizer = seed % 5 == 0;
  }
  return c;
}

struct GradCheckSuiteReport {
  bool pass = true;
  double max_rel_err = 0.0;
  std::vector<std::string> lines;  // one summary line per loss kind
};

inline const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::SupconMargin: return "supcon_margin";
    case LossKind::SupconPlain: return "supcon_plain";
    case LossKind::CrossEntropy: return "cross_entropy";
  }
  return "?";
}

/// The full finite-difference suite: 20 seeded configurations per loss
/// kind, step 1e-5, tolerance 1e-4.
inline GradCheckSuiteReport run_gradcheck_suite(const LossConfig& base_cfg,
                                                int seeds_per_kind = 20,
                                                std::uint64_t seed_base = 401) {
  GradCheckSuiteReport suite;
  for (const LossKind kind : {LossKind::SupconMargin, LossKind::SupconPlain,
                              LossKind::CrossEntropy}) {
    double worst = 0.0;
    bool pass = true;
    for (int s = 0; s < seeds_per_kind; ++s) {
      const auto c = make_gradcheck_case(seed_base + s, kind, base_cfg);
      const auto report =
          gradcheck_loss(c.params, c.views, c.labels, c.fused_pos, c.fused_neg,
                         kind, c.loss_cfg);
      worst = std::max(worst, report.max_rel_err);
      pass = pass && report.pass;
    }
    suite.pass = suite.pass && pass;
    suite.max_rel_err = std::max(suite.max_rel_err, worst);
    char worst_text[32];
    std::snprintf(worst_text, sizeof(worst_text), "%.3e", worst);
    suite.lines.push_back(std::string(to_string(kind)) + ": max rel err " +
                          worst_text + (pass ? " (pass)" : " (FAIL)"));
  }
  return suite;
}

}  // namespace realcl
