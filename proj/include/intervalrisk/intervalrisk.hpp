#pragma once

#include "intervalrisk/error.hpp"
#include "intervalrisk/timestamp.hpp"
#include "intervalrisk/domain.hpp"
#include "intervalrisk/io.hpp"
#include "intervalrisk/design.hpp"
#include "intervalrisk/distributions.hpp"
#include "intervalrisk/lme.hpp"
#include "intervalrisk/inference.hpp"
#include "intervalrisk/stepwise.hpp"
#include "intervalrisk/simulate.hpp"
#include "intervalrisk/report.hpp"
#include "intervalrisk/service.hpp"
