#pragma once

#include "isac/config.hpp"
#include "isac/random.hpp"
#include "isac/parallel.hpp"
#include "isac/topology.hpp"
#include "isac/channel.hpp"
#include "isac/metrics.hpp"
#include "isac/convex.hpp"
#include "isac/power.hpp"
#include "isac/selection.hpp"
#include "isac/oracle.hpp"
#include "isac/harness.hpp"
#include "isac/verification.hpp"
