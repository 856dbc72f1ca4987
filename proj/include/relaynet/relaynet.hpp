#pragma once

// Umbrella header.

#include "relaynet/alloc.hpp"
#include "relaynet/analysis.hpp"
#include "relaynet/bounds.hpp"
#include "relaynet/common.hpp"
#include "relaynet/io.hpp"
#include "relaynet/mc.hpp"
#include "relaynet/model.hpp"
#include "relaynet/optim.hpp"
#include "relaynet/rng.hpp"
#include "relaynet/schemes.hpp"
