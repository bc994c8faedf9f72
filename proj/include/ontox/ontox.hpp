#pragma once

#include "ontox/error.hpp"
#include "ontox/vecstore.hpp"
#include "ontox/hac.hpp"
#include "ontox/conceptbank.hpp"
#include "ontox/ontology.hpp"
#include "ontox/inference.hpp"
#include "ontox/evalkit.hpp"
#include "ontox/manifest.hpp"
