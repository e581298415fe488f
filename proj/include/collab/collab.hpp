#pragma once

#include "collab/allocation.hpp"
#include "collab/diffusion.hpp"
#include "collab/error.hpp"
#include "collab/experiment.hpp"
#include "collab/network.hpp"
#include "collab/network_json.hpp"
#include "collab/parallel.hpp"
#include "collab/policies.hpp"
#include "collab/random.hpp"
#include "collab/sim.hpp"
#include "collab/solver.hpp"
