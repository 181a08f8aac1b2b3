#pragma once

#include "skytrust/baselines.hpp"
#include "skytrust/config.hpp"
#include "skytrust/consensus.hpp"
#include "skytrust/digest.hpp"
#include "skytrust/dtsam.hpp"
#include "skytrust/errors.hpp"
#include "skytrust/experiment.hpp"
#include "skytrust/fed.hpp"
#include "skytrust/ledger.hpp"
#include "skytrust/metrics.hpp"
#include "skytrust/netsim.hpp"
#include "skytrust/rng.hpp"
#include "skytrust/simulation.hpp"
#include "skytrust/trust.hpp"
