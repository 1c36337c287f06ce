#pragma once

// semid - identification engine for linear structural equation models on
// mixed graphs: instrumental sets, auxiliary variables, the general
// half-trek criterion, testable implications, and a numeric oracle.

#include "augment.hpp"
#include "cli.hpp"
#include "constraints.hpp"
#include "graph.hpp"
#include "identify.hpp"
#include "json_io.hpp"
#include "oracle.hpp"
#include "paths.hpp"
#include "wright.hpp"
