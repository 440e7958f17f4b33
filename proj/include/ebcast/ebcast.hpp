#pragma once

// Umbrella header.

#include "ebcast/bounds.hpp"
#include "ebcast/channel.hpp"
#include "ebcast/errors.hpp"
#include "ebcast/gf2.hpp"
#include "ebcast/harness.hpp"
#include "ebcast/onesided.hpp"
#include "ebcast/rng.hpp"
#include "ebcast/source.hpp"
#include "ebcast/trace.hpp"
#include "ebcast/universal.hpp"
