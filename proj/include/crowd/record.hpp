#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crowd/belief.hpp"

namespace crowd {

/// One participant's answer in one round: the pre-social prediction, the
/// peer histogram they were shown and the revised post-social prediction.
struct PredictionRecord {
  std::string round_id;
  std::string user_id;
  std::string asset_id;
  double pre_social = 0.0;
  double post_social = 0.0;
  SocialHistogram si;
  std::optional<int> confidence;  // 1..5, carried but unused by the models

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// Records of one round, in input order.
struct Round {
  std::string id;
  std::vector<PredictionRecord> records;

  friend bool operator==(const Round&, const Round&) = default;
};

}  // namespace crowd
