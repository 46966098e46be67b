#pragma once

#include "voltplug/device.hpp"
#include "voltplug/errors.hpp"
#include "voltplug/host.hpp"
#include "voltplug/json_io.hpp"
#include "voltplug/metering.hpp"
#include "voltplug/rng.hpp"
#include "voltplug/scenario.hpp"
#include "voltplug/simkernel.hpp"
#include "voltplug/wire.hpp"
