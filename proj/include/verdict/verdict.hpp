#pragma once

#include "verdict/data.hpp"
#include "verdict/dupfree.hpp"
#include "verdict/em.hpp"
#include "verdict/forest.hpp"
#include "verdict/lf_dependency.hpp"
#include "verdict/smote.hpp"
#include "verdict/synth.hpp"
#include "verdict/transitivity_exact.hpp"
#include "verdict/transitivity_net.hpp"
