#pragma once

// Umbrella header.

#include "realcl/center.hpp"
#include "realcl/config.hpp"
#include "realcl/errors.hpp"
#include "realcl/fused.hpp"
#include "realcl/fusion.hpp"
#include "realcl/gradcheck.hpp"
#include "realcl/loss.hpp"
#include "realcl/manifest.hpp"
#include "realcl/metrics.hpp"
#include "realcl/model.hpp"
#include "realcl/numeric.hpp"
#include "realcl/pairing.hpp"
#include "realcl/rng.hpp"
#include "realcl/synth.hpp"
#include "realcl/trainer.hpp"
