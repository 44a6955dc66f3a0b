"""
Tensores densos en doble precisión con diferenciación automática en modo reverso
Cada operación se registra en la cinta (Tape) activa del hilo cuando hay
seguimiento de gradientes; backward recorre la cinta en orden inverso
"""
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError, ShapeError

_estado = threading.local()


def _pila_cintas() -> List["Tape"]:
    if not hasattr(_estado, "cintas"):
        _estado.cintas = []
    return _estado.cintas


def grad_enabled() -> bool:
    return getattr(_estado, "sin_grad", 0) == 0


@contextmanager
def no_grad():
    """Desactiva el registro en la cinta (rama momentum, evaluación)"""
    _estado.sin_grad = getattr(_estado, "sin_grad", 0) + 1
    try:
        yield
    finally:
        _estado.sin_grad -= 1


@contextmanager
def record_branches():
    """
    Registra las decisiones no suaves (máscaras de relu, argmax de max-pooling)
    de las operaciones ejecutadas dentro del bloque
    """
    anterior = getattr(_estado, "ramas", None)
    ramas: List[np.ndarray] = []
    _estado.ramas = ramas
    try:
        yield ramas
    finally:
        _estado.ramas = anterior


def _anotar_rama(decision: np.ndarray) -> None:
    ramas = getattr(_estado, "ramas", None)
    if ramas is not None:
        ramas.append(np.array(decision, copy=True))


class Tensor:
    """Arreglo denso float64 con buffer de gradiente opcional"""

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", self.shape)
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), requires_grad=False, name=self.name)

    def __repr__(self):
        nombre = f" '{self.name}'" if self.name else ""
        return f"<Tensor{nombre} shape={self.shape} requires_grad={self.requires_grad}>"

    def __len__(self) -> int:
        return self.data.shape[0]

    def __add__(self, otro):
        return add(self, _como_tensor(otro))

    __radd__ = __add__

    def __sub__(self, otro):
        return sub(self, _como_tensor(otro))

    def __rsub__(self, otro):
        return sub(_como_tensor(otro), self)

    def __mul__(self, otro):
        if np.isscalar(otro):
            return scale(self, float(otro))
        return mul(self, _como_tensor(otro))

    __rmul__ = __mul__

    def __truediv__(self, otro):
        if not np.isscalar(otro):
            raise ContractError("Sólo se admite división por escalares")
        return scale(self, 1.0 / float(otro))

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, otro):
        return matmul(self, otro)


def _como_tensor(valor) -> Tensor:
    return valor if isinstance(valor, Tensor) else Tensor(valor)


@dataclass
class _Registro:
    salida: Tensor
    entradas: Tuple[Tensor, ...]
    retroceso: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """
    Cinta de operaciones en orden topológico

    Uso:
        with Tape() as tape:
            loss = f(x)
        backward(tape, loss)
    """

    def __init__(self):
        self.records: List[_Registro] = []
        self.grads: Dict[int, np.ndarray] = {}

    def __enter__(self) -> "Tape":
        _pila_cintas().append(self)
        return self

    def __exit__(self, *exc):
        _pila_cintas().remove(self)
        return False

    def __len__(self) -> int:
        return len(self.records)

    def record(self, salida: Tensor, entradas: Sequence[Tensor], retroceso) -> None:
        self.records.append(_Registro(salida, tuple(entradas), retroceso))

    def grad(self, tensor: Tensor) -> Optional[np.ndarray]:
        return self.grads.get(id(tensor))


def _resultado(data: np.ndarray, entradas: Sequence[Tensor], retroceso) -> Tensor:
    """Crea el tensor de salida y lo registra en la cinta activa si corresponde"""
    requiere = grad_enabled() and any(t.requires_grad for t in entradas)
    salida = Tensor(data)
    if requiere:
        pila = _pila_cintas()
        if pila:
            salida.requires_grad = True
            pila[-1].record(salida, entradas, retroceso)
    return salida


def backward(tape: Tape, loss: Tensor) -> Dict[int, np.ndarray]:
    """
    Propaga gradientes desde una pérdida escalar

    Args:
        tape: Cinta donde se registró el grafo
        loss: Tensor escalar producido en la cinta

    Returns:
        Diccionario id(tensor) -> gradiente (también asignado a tensor.grad)

    Raises:
        ContractError: Si la pérdida no es escalar o no está en la cinta
    """
    if loss.data.size != 1:
        raise ContractError(f"backward requiere una pérdida escalar, recibida forma {loss.shape}")
    producidos = {id(r.salida) for r in tape.records}
    if id(loss) not in producidos and not loss.requires_grad:
        raise ContractError("La pérdida no está registrada en la cinta")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    tensores: Dict[int, Tensor] = {id(loss): loss}

    for registro in reversed(tape.records):
        g = grads.get(id(registro.salida))
        if g is None:
            continue
        locales = registro.retroceso(g)
        for entrada, g_local in zip(registro.entradas, locales):
            if g_local is None or not entrada.requires_grad:
                continue
            clave = id(entrada)
            tensores[clave] = entrada
            if clave in grads:
                grads[clave] = grads[clave] + g_local
            else:
                grads[clave] = np.array(g_local, dtype=np.float64, copy=True)

    for clave, tensor in tensores.items():
        tensor.grad = grads[clave]
    tape.grads = grads
    return grads


# ========== OPERACIONES ELEMENTALES ==========

def _reducir_broadcast(g: np.ndarray, forma: Tuple[int, ...]) -> np.ndarray:
    """Suma el gradiente sobre los ejes que fueron difundidos (broadcast)"""
    while g.ndim > len(forma):
        g = g.sum(axis=0)
    for eje, n in enumerate(forma):
        if n == 1 and g.shape[eje] != 1:
            g = g.sum(axis=eje, keepdims=True)
    return g


def _verificar_broadcast(nombre: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(nombre, a.shape, b.shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    _verificar_broadcast("add", a, b)
    return _resultado(
        a.data + b.data, (a, b),
        lambda g: (_reducir_broadcast(g, a.shape), _reducir_broadcast(g, b.shape)),
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    _verificar_broadcast("sub", a, b)
    return _resultado(
        a.data - b.data, (a, b),
        lambda g: (_reducir_broadcast(g, a.shape), -_reducir_broadcast(g, b.shape)),
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    _verificar_broadcast("mul", a, b)
    return _resultado(
        a.data * b.data, (a, b),
        lambda g: (_reducir_broadcast(g * b.data, a.shape), _reducir_broadcast(g * a.data, b.shape)),
    )


def scale(a: Tensor, c: float) -> Tensor:
    return _resultado(a.data * c, (a,), lambda g: (g * c,))


def sum(a: Tensor) -> Tensor:  # noqa: A001 - nombre de la operación
    return _resultado(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, a.shape),))


def mean(a: Tensor) -> Tensor:
    n = a.data.size
    return _resultado(np.asarray(a.data.mean()), (a,), lambda g: (np.broadcast_to(g / n, a.shape),))


def reshape(a: Tensor, forma) -> Tensor:
    try:
        data = a.data.reshape(forma)
    except ValueError:
        raise ShapeError("reshape", a.shape, tuple(np.atleast_1d(forma)))
    return _resultado(data, (a,), lambda g: (g.reshape(a.shape),))


def relu(a: Tensor) -> Tensor:
    mascara = a.data > 0
    _anotar_rama(mascara)
    return _resultado(np.where(mascara, a.data, 0.0), (a,), lambda g: (g * mascara,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    return _resultado(
        a.data @ b.data, (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError("transpose", a.shape)
    return _resultado(a.data.T.copy(), (a,), lambda g: (g.T,))


def concat(tensores: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensores = list(tensores)
    if not tensores:
        raise ShapeError("concat", ())
    eje = axis % tensores[0].ndim
    for t in tensores[1:]:
        if t.ndim != tensores[0].ndim or any(
            t.shape[i] != tensores[0].shape[i] for i in range(t.ndim) if i != eje
        ):
            raise ShapeError("concat", tensores[0].shape, t.shape)
    cortes = np.cumsum([t.shape[eje] for t in tensores])[:-1]

    def retroceso(g):
        return tuple(np.split(g, cortes, axis=eje))

    return _resultado(np.concatenate([t.data for t in tensores], axis=eje), tensores, retroceso)


def gather(a: Tensor, indices) -> Tensor:
    """Selecciona filas (eje 0) por índice; los índices pueden repetirse"""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < -a.shape[0] or indices.max() >= a.shape[0]):
        raise ShapeError("gather", a.shape, indices.shape)

    def retroceso(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, indices, g)
        return (ga,)

    return _resultado(a.data[indices], (a,), retroceso)


# ========== POOLING Y NORMALIZACIÓN ==========

def max_reduce(a: Tensor, axis: int = 0) -> Tensor:
    """Máximo sobre un eje; los empates se resuelven hacia el índice menor"""
    if a.shape[axis] == 0:
        raise ShapeError("max_reduce", a.shape)
    idx = np.argmax(a.data, axis=axis)
    _anotar_rama(idx)
    idx_exp = np.expand_dims(idx, axis)

    def retroceso(g):
        ga = np.zeros_like(a.data)
        np.put_along_axis(ga, idx_exp, np.expand_dims(g, axis), axis=axis)
        return (ga,)

    return _resultado(np.take_along_axis(a.data, idx_exp, axis=axis).squeeze(axis), (a,), retroceso)


def max_pool_global(a: Tensor) -> Tensor:
    """Máximo por columna sobre las filas (cada fila es un elemento)"""
    if a.ndim != 2:
        raise ShapeError("max_pool_global", a.shape)
    return max_reduce(a, axis=0)


def max_pool_2d(a: Tensor, kernel: int = 2) -> Tensor:
    """Max-pooling no solapado sobre un mapa HxWxC"""
    if a.ndim != 3 or a.shape[0] % kernel or a.shape[1] % kernel:
        raise ShapeError("max_pool_2d", a.shape, (kernel, kernel))
    alto, ancho, canales = a.shape
    ho, wo = alto // kernel, ancho // kernel
    ventanas = (
        a.data.reshape(ho, kernel, wo, kernel, canales)
        .transpose(0, 2, 1, 3, 4)
        .reshape(ho, wo, kernel * kernel, canales)
    )
    idx = np.argmax(ventanas, axis=2)
    _anotar_rama(idx)
    salida = np.take_along_axis(ventanas, idx[:, :, None, :], axis=2)[:, :, 0, :]

    def retroceso(g):
        gv = np.zeros_like(ventanas)
        np.put_along_axis(gv, idx[:, :, None, :], g[:, :, None, :], axis=2)
        ga = (
            gv.reshape(ho, wo, kernel, kernel, canales)
            .transpose(0, 2, 1, 3, 4)
            .reshape(alto, ancho, canales)
        )
        return (ga,)

    return _resultado(salida, (a,), retroceso)


def layer_norm(a: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalización por capa sin parámetros sobre el último eje"""
    media = a.data.mean(axis=-1, keepdims=True)
    centrado = a.data - media
    inv = 1.0 / np.sqrt((centrado ** 2).mean(axis=-1, keepdims=True) + eps)
    y = centrado * inv

    def retroceso(g):
        return (inv * (g - g.mean(axis=-1, keepdims=True) - y * (g * y).mean(axis=-1, keepdims=True)),)

    return _resultado(y, (a,), retroceso)


def l2_normalize(a: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    norma = np.maximum(np.sqrt((a.data ** 2).sum(axis=axis, keepdims=True)), eps)
    y = a.data / norma

    def retroceso(g):
        return ((g - y * (g * y).sum(axis=axis, keepdims=True)) / norma,)

    return _resultado(y, (a,), retroceso)


def softmax_cross_entropy(logits: Tensor, targets) -> Tensor:
    """
    Entropía cruzada softmax promediada sobre las filas

    Args:
        logits: Tensor (n, K) o (K,)
        targets: Índice de la clase correcta por fila (entero o arreglo de n)

    Returns:
        Tensor escalar
    """
    vector = logits.ndim == 1
    z = logits.data[None, :] if vector else logits.data
    if z.ndim != 2 or z.shape[1] == 0:
        raise ShapeError("softmax_cross_entropy", logits.shape)
    t = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    if t.shape != (z.shape[0],) or t.min() < 0 or t.max() >= z.shape[1]:
        raise ShapeError("softmax_cross_entropy", logits.shape, t.shape)

    desplazado = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(desplazado).sum(axis=1, keepdims=True))
    log_p = desplazado - lse
    filas = np.arange(z.shape[0])
    perdida = -log_p[filas, t].mean()

    def retroceso(g):
        gz = np.exp(log_p)
        gz[filas, t] -= 1.0
        gz *= g / z.shape[0]
        return (gz[0] if vector else gz,)

    return _resultado(np.asarray(perdida), (logits,), retroceso)


# ========== CONVOLUCIONES ==========

@lru_cache(maxsize=64)
def _indice_conv(espacial: Tuple[int, ...], kernel: int, stride: int, padding: int):
    """
    Índices im2col para una convolución densa N-dimensional

    Returns:
        (idx, forma_salida): idx es (M, K) con la fila plana de entrada de cada
        posición de salida y desplazamiento del kernel; el padding apunta a la
        fila extra prod(espacial)
    """
    nd = len(espacial)
    salida = tuple((n + 2 * padding - kernel) // stride + 1 for n in espacial)
    if any(o <= 0 for o in salida):
        raise ShapeError("conv", espacial, (kernel,) * nd)
    o = np.indices(salida).reshape(nd, -1)
    kk = np.indices((kernel,) * nd).reshape(nd, -1)
    coord = o[:, :, None] * stride - padding + kk[:, None, :]
    limites = np.array(espacial)[:, None, None]
    dentro = np.all((coord >= 0) & (coord < limites), axis=0)
    plano = np.ravel_multi_index(tuple(np.where(dentro, coord, 0)), espacial)
    idx = np.where(dentro, plano, int(np.prod(espacial)))
    idx.setflags(write=False)
    return idx, salida


def _conv_filas(x: Tensor, espacial: Tuple[int, ...], w: Tensor, b: Optional[Tensor], idx: np.ndarray) -> Tensor:
    """Convolución como gather + matmul sobre filas (canales al final)"""
    c_in = x.shape[-1]
    c_out = w.shape[-1]
    filas = x.data.reshape(-1, c_in)
    relleno = np.vstack([filas, np.zeros((1, c_in))])
    columnas = relleno[idx].reshape(len(idx), -1)
    w2 = w.data.reshape(-1, c_out)
    salida = columnas @ w2
    if b is not None:
        salida = salida + b.data
    k = idx.shape[1]

    def retroceso(g):
        gw = (columnas.T @ g).reshape(w.shape)
        dcols = (g @ w2.T).reshape(len(idx), k, c_in)
        gx = np.zeros((filas.shape[0] + 1, c_in))
        for j in range(k):
            # para un desplazamiento fijo las posiciones de entrada son distintas
            gx[idx[:, j]] += dcols[:, j, :]
        grads = [gx[:-1].reshape(x.shape), gw]
        if b is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    entradas = (x, w) if b is None else (x, w, b)
    return _resultado(salida, entradas, retroceso)


def _verificar_conv(nombre: str, x: Tensor, w: Tensor, nd: int, b: Optional[Tensor]) -> int:
    if x.ndim != nd + 1 or w.ndim != nd + 2 or len(set(w.shape[:nd])) != 1 or w.shape[nd] != x.shape[-1]:
        raise ShapeError(nombre, x.shape, w.shape)
    if b is not None and b.shape != (w.shape[-1],):
        raise ShapeError(nombre, w.shape, b.shape)
    return w.shape[0]


def conv2d(x: Tensor, w: Tensor, b: Optional[Tensor] = None, stride: int = 1, padding: int = 0) -> Tensor:
    """
    Convolución 2D densa con canales al final

    Args:
        x: Entrada (H, W, Cin)
        w: Pesos (k, k, Cin, Cout)
        b: Bias (Cout,) opcional
        stride: Paso
        padding: Relleno con ceros en cada borde

    Returns:
        Tensor (Ho, Wo, Cout)
    """
    kernel = _verificar_conv("conv2d", x, w, 2, b)
    idx, salida = _indice_conv(tuple(x.shape[:2]), kernel, stride, padding)
    filas = _conv_filas(x, x.shape[:2], w, b, idx)
    return reshape(filas, salida + (w.shape[-1],))


def conv3d(
    x: Tensor,
    w: Tensor,
    b: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
    out_positions: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Convolución 3D densa con canales al final

    Args:
        x: Entrada (D, H, W, Cin)
        w: Pesos (k, k, k, Cin, Cout)
        b: Bias (Cout,) opcional
        stride: Paso
        padding: Relleno con ceros
        out_positions: Índices planos de salida a evaluar (None = toda la grilla).
            Evaluar un subconjunto da exactamente las mismas filas que la
            convolución densa completa.

    Returns:
        Tensor (Do, Ho, Wo, Cout), o (M, Cout) si se pasan out_positions
    """
    kernel = _verificar_conv("conv3d", x, w, 3, b)
    idx, salida = _indice_conv(tuple(x.shape[:3]), kernel, stride, padding)
    if out_positions is not None:
        return _conv_filas(x, x.shape[:3], w, b, idx[np.asarray(out_positions, dtype=np.int64)])
    filas = _conv_filas(x, x.shape[:3], w, b, idx)
    return reshape(filas, salida + (w.shape[-1],))
