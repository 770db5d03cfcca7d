#pragma once

#include "zeropi/special_functions.hpp"
#include "zeropi/core_model.hpp"
#include "zeropi/control_field.hpp"
#include "zeropi/signal.hpp"
#include "zeropi/propagator.hpp"
#include "zeropi/observables.hpp"
#include "zeropi/timebins.hpp"
#include "zeropi/oracle_pde.hpp"
#include "zeropi/io.hpp"
#include "zeropi/scenarios.hpp"
