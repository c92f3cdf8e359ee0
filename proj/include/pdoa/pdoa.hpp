#pragma once

#include "pdoa/error.hpp"
#include "pdoa/model.hpp"
#include "pdoa/random.hpp"
#include "pdoa/protocol.hpp"
#include "pdoa/matrix_csv.hpp"
#include "pdoa/estimator.hpp"
#include "pdoa/crlb.hpp"
#include "pdoa/harness.hpp"
