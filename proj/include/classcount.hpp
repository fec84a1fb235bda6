#pragma once

#include "classcount/affinity.hpp"
#include "classcount/classical.hpp"
#include "classcount/envelope.hpp"
#include "classcount/error.hpp"
#include "classcount/frequency_data.hpp"
#include "classcount/hankel.hpp"
#include "classcount/linalg.hpp"
#include "classcount/mixture.hpp"
#include "classcount/montecarlo.hpp"
#include "classcount/npmle.hpp"
#include "classcount/pathology.hpp"
#include "classcount/random.hpp"
#include "classcount/report.hpp"
#include "classcount/simplex.hpp"
