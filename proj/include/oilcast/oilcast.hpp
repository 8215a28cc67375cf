#pragma once

#include "oilcast/arima.hpp"
#include "oilcast/bench.hpp"
#include "oilcast/dataset.hpp"
#include "oilcast/error.hpp"
#include "oilcast/evalkit.hpp"
#include "oilcast/ffnet.hpp"
#include "oilcast/numkit.hpp"
#include "oilcast/ridge.hpp"
#include "oilcast/synthetic.hpp"
