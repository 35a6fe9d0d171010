#pragma once

// Umbrella header: hurricane/buoy implicit-regression toolkit.

#include "stormfit/bins.hpp"
#include "stormfit/classify.hpp"
#include "stormfit/conics.hpp"
#include "stormfit/csv.hpp"
#include "stormfit/digest.hpp"
#include "stormfit/errors.hpp"
#include "stormfit/factor.hpp"
#include "stormfit/implicit.hpp"
#include "stormfit/ingest.hpp"
#include "stormfit/lagscan.hpp"
#include "stormfit/linalg.hpp"
#include "stormfit/numeric.hpp"
#include "stormfit/terms.hpp"
#include "stormfit/time.hpp"
