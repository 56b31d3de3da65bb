#pragma once

// Umbrella header: secure-aggregation library plus federation simulator.

#include "shard/common.hpp"
#include "shard/field.hpp"
#include "shard/groups.hpp"
#include "shard/hypergeom.hpp"
#include "shard/params.hpp"
#include "shard/protocol.hpp"
#include "shard/shamir.hpp"
#include "shard/sim.hpp"
