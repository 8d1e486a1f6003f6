#include "spontts/numerics/adam.hpp"
#include "spontts/numerics/layers.hpp"

namespace spontts {

template class Tape<float>;
template class Tape<double>;
template void adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&);
template void adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&);

}  // namespace spontts
