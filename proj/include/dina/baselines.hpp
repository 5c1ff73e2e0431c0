#pragma once

#include "dina/estimator.hpp"

namespace dina {

enum class BaselineKind { SE, X, PAX, E };

// Separate estimation: per-arm natural-parameter fits, then least squares
// of eta1_hat - eta0_hat on [1, x].
DinaFit fit_se(const Dataset& data, const LearnerSpec& outcome_spec = LearnerSpec::glm());

// X-learner: eta0_hat on controls, then a GLM on the treated rows with
// eta0_hat as the offset.
DinaFit fit_x(const Dataset& data, const LearnerSpec& outcome_spec = LearnerSpec::glm());

// Propensity-adjusted X-learner: as X, but eta0_hat is trained on the
// augmented features [x, e_hat(x), x * e_hat(x)].
DinaFit fit_pax(const Dataset& data, const LearnerSpec& propensity_spec = LearnerSpec::glm(),
                const LearnerSpec& outcome_spec = LearnerSpec::glm());

// Direct R-learner extension: the DINA pipeline with a(x) = e_hat(x).
DinaFit fit_e(const Dataset& data, const DinaOptions& options = {});

// dispatch by kind with shared options
DinaFit fit_baseline(BaselineKind kind, const Dataset& data, const DinaOptions& options = {});

}  // namespace dina
