"""
Representação de Weierstrass em escala de bancada.

Convenção: φ_j é a 1-forma holomorfa com dX_j = Re φ_j e ds² = Σ|φ_j|².
As formas são guardadas pelo coeficiente f em φ = f(z) dz; todas as
amostras devolvidas aqui são valores de f (isto é, φ/dz).
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import structlog
from numpy.polynomial import legendre, polynomial

from configuracao import CONVENCAO, QUADRATURA, TOLERANCIAS
from dominio_plano import (AnnulusChart, Cycle, DiskChart, Domain, Grid,
                           generator_cycle, make_annulus, make_disk)
from erros import (BranchPointError, PreconditionError, RepresentationError,
                   VerificationFailure, WellDefinednessError)

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    """Σ a_k z^k para k = k_min .. k_min + len(coefs) - 1"""

    coefs: np.ndarray
    k_min: int = 0

    @classmethod
    def constante(cls, c: complex) -> "LaurentPoly":
        return cls(np.array([c], dtype=complex), 0)

    @classmethod
    def monomio(cls, k: int, c: complex = 1.0) -> "LaurentPoly":
        return cls(np.array([c], dtype=complex), k)

    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls.constante(0.0)

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.coefs) - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def grau(self) -> int:
        return max(abs(self.k_min), abs(self.k_max))

    def coeficiente(self, k: int) -> complex:
        if self.k_min <= k <= self.k_max:
            return complex(self.coefs[k - self.k_min])
        return 0j

    def ordem_origem(self) -> int:
        """Menor índice com coeficiente não nulo (ordem do zero em z = 0)"""
        nao_nulos = np.nonzero(self.coefs)[0]
        if len(nao_nulos) == 0:
            raise RepresentationError("forma identicamente nula")
        return int(self.k_min + nao_nulos[0])

    def avaliar(self, z) -> np.ndarray:
        """Horner em z para as potências positivas e em 1/z para as negativas"""
        z = np.asarray(z, dtype=complex)
        k = self.indices
        resultado = np.zeros(z.shape, dtype=complex)
        positivos = k >= 0
        if np.any(positivos):
            c = np.zeros(self.k_max + 1, dtype=complex)
            c[k[positivos]] = self.coefs[positivos]
            resultado = resultado + polynomial.polyval(z, c)
        if np.any(~positivos):
            c = np.zeros(-self.k_min + 1, dtype=complex)
            c[-k[~positivos]] = self.coefs[~positivos]
            with np.errstate(divide="ignore", invalid="ignore"):
                resultado = resultado + polynomial.polyval(1.0 / z, c)
        return resultado

    def deslocar(self, m: int) -> "LaurentPoly":
        """Multiplica por z^m"""
        return LaurentPoly(self.coefs, self.k_min + m)

    def escalar(self, c: complex) -> "LaurentPoly":
        return LaurentPoly(self.coefs * c, self.k_min)

    def __add__(self, outro: "LaurentPoly") -> "LaurentPoly":
        k_min = min(self.k_min, outro.k_min)
        k_max = max(self.k_max, outro.k_max)
        coefs = np.zeros(k_max - k_min + 1, dtype=complex)
        coefs[self.k_min - k_min:self.k_max - k_min + 1] += self.coefs
        coefs[outro.k_min - k_min:outro.k_max - k_min + 1] += outro.coefs
        return LaurentPoly(coefs, k_min)

    def __sub__(self, outro: "LaurentPoly") -> "LaurentPoly":
        return self + outro.escalar(-1.0)

    def primitiva(self) -> Tuple["LaurentPoly", complex]:
        """Primitiva Laurent e o resíduo a_{-1} (termo logarítmico à parte)"""
        k = self.indices
        coefs = np.where(k == -1, 0.0, self.coefs / np.where(k == -1, 1, k + 1))
        return LaurentPoly(coefs.astype(complex), self.k_min + 1), self.coeficiente(-1)

    def to_dict(self) -> Dict:
        return {"k_min": int(self.k_min),
                "coeficientes": [[float(c.real), float(c.imag)] for c in self.coefs]}

    @classmethod
    def from_dict(cls, dados: Dict) -> "LaurentPoly":
        coefs = np.array([complex(re, im) for re, im in dados["coeficientes"]], dtype=complex)
        return cls(coefs, int(dados["k_min"]))


@dataclass(frozen=True, eq=False)
class ExpLaurent:
    """Forma z^m e^{f(z)}: sem zeros em qualquer portador que não contenha 0 (m = 0 no disco)"""

    f: LaurentPoly
    m: int = 0

    def avaliar(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return z ** self.m * np.exp(self.f.avaliar(z))

    def deslocar(self, k: int) -> "ExpLaurent":
        return ExpLaurent(self.f, self.m + k)

    @property
    def grau(self) -> int:
        return self.f.grau

    def ordem_origem(self) -> int:
        return self.m

    def to_dict(self) -> Dict:
        return {"tipo": "exp", "m": int(self.m), "f": self.f.to_dict()}


Forma = Union[LaurentPoly, ExpLaurent]


def forma_from_dict(dados: Dict) -> Forma:
    if dados.get("tipo") == "exp":
        return ExpLaurent(LaurentPoly.from_dict(dados["f"]), int(dados["m"]))
    return LaurentPoly.from_dict(dados)


@dataclass(frozen=True, eq=False)
class GaussPair:
    """g = fator · z^m · e^{u(z)} e eta3 no papel de φ3"""

    u: LaurentPoly
    eta3: Forma
    m: int = 0
    fator: complex = 1.0

    def g(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.fator * z ** self.m * np.exp(self.u.avaliar(z))

    def to_dict(self) -> Dict:
        eta3 = self.eta3.to_dict()
        return {"m": int(self.m), "fator": [float(complex(self.fator).real), float(complex(self.fator).imag)],
                "u": self.u.to_dict(), "eta3": eta3}

    @classmethod
    def from_dict(cls, dados: Dict) -> "GaussPair":
        return cls(u=LaurentPoly.from_dict(dados["u"]), eta3=forma_from_dict(dados["eta3"]),
                   m=int(dados["m"]), fator=complex(*dados.get("fator", [1.0, 0.0])))


@dataclass(frozen=True, eq=False)
class WeierstrassTriple:
    """
    Tripla (φ1, φ2, φ3) sobre um portador.

    forma "laurent": três polinômios de Laurent em `componentes`.
    forma "gauss": avaliada a partir de `par` (g, φ3), isotrópica por construção.
    """

    carrier: Domain
    forma: str
    componentes: Optional[Tuple[LaurentPoly, LaurentPoly, LaurentPoly]] = None
    par: Optional[GaussPair] = None

    @property
    def phi3(self) -> Forma:
        if self.forma == "laurent":
            return self.componentes[2]
        return self.par.eta3

    def avaliar(self, z) -> np.ndarray:
        """Valores (3, ...) de φ_j/dz"""
        z = np.asarray(z, dtype=complex)
        if self.forma == "laurent":
            return np.stack([c.avaliar(z) for c in self.componentes])
        par = self.par
        with np.errstate(over="ignore", invalid="ignore"):
            a = np.exp(-par.u.avaliar(z)) * par.eta3.deslocar(-par.m).avaliar(z) / par.fator
            b = np.exp(par.u.avaliar(z)) * par.eta3.deslocar(par.m).avaliar(z) * par.fator
        return np.stack([0.5 * (a - b), 0.5j * (a + b), par.eta3.avaliar(z)])

    def to_dict(self) -> Dict:
        portador = {"tipo": "disco", "raio_externo": self.carrier.outer_radius} if self.carrier.e_disco else {
            "tipo": "anel", "raio_interno": self.carrier.inner_radius, "raio_externo": self.carrier.outer_radius}
        dados = {"convencao": CONVENCAO, "portador": portador, "forma": self.forma}
        if self.forma == "laurent":
            dados["grau"] = max(c.grau for c in self.componentes)
            dados["componentes"] = [c.to_dict() for c in self.componentes]
        else:
            dados["grau"] = max(self.par.u.grau, self.par.eta3.grau)
            dados["par_gauss"] = self.par.to_dict()
        return dados

    @classmethod
    def from_dict(cls, dados: Dict) -> "WeierstrassTriple":
        if dados.get("convencao") != CONVENCAO:
            raise RepresentationError(f"convenção desconhecida: {dados.get('convencao')}")
        portador = dados["portador"]
        if portador["tipo"] == "disco":
            carrier: Domain = make_disk(portador["raio_externo"])
        else:
            carrier = make_annulus(portador["raio_interno"], portador["raio_externo"])
        if dados["forma"] == "laurent":
            comps = tuple(LaurentPoly.from_dict(c) for c in dados["componentes"])
            return cls(carrier=carrier, forma="laurent", componentes=comps)
        return from_gauss_pair(GaussPair.from_dict(dados["par_gauss"]), carrier)


@dataclass(frozen=True, eq=False)
class TriplaTransformada:
    """ψ = A·φ, usada na troca para superfícies maximais (assinatura Lorentziana)"""

    base: WeierstrassTriple
    matriz: np.ndarray
    modo: str

    @property
    def carrier(self) -> Domain:
        return self.base.carrier

    def avaliar(self, z) -> np.ndarray:
        return np.tensordot(self.matriz, self.base.avaliar(z), axes=1)


@dataclass(frozen=True, eq=False)
class ImmersionField:
    grid: Grid
    valores: np.ndarray          # (3, radial, angular)
    basepoint: complex
    erro_h: Optional[float] = None

    def sup_distancia(self, outro: "ImmersionField") -> float:
        return float(np.max(np.linalg.norm(self.valores - outro.valores, axis=0)))


@dataclass(frozen=True, eq=False)
class MetricField:
    grid: Grid
    lambda2: np.ndarray          # (radial, angular)

    @property
    def lam(self) -> np.ndarray:
        return np.sqrt(self.lambda2)


@dataclass
class GaussMapReport:
    amostras: np.ndarray
    min_abs: float
    max_abs: float
    sem_zeros: bool
    sem_polos: bool

    @property
    def omite_zero_e_infinito(self) -> bool:
        return self.sem_zeros and self.sem_polos

    def to_dict(self) -> Dict:
        return {"min_abs_g": self.min_abs, "max_abs_g": self.max_abs,
                "sem_zeros": self.sem_zeros, "sem_polos": self.sem_polos,
                "omite_0_e_infinito": self.omite_zero_e_infinito}


# ---------------------------------------------------------------------------
# Construção
# ---------------------------------------------------------------------------

def _exigir_origem(carrier: Domain):
    if carrier.center != 0:
        raise RepresentationError("triplas exigem portador centrado na origem")


def from_gauss_pair(pair: GaussPair, carrier: Domain) -> WeierstrassTriple:
    """
    φ1 = ½(1/g − g)φ3, φ2 = (i/2)(1/g + g)φ3.

    No disco, zeros/polos de g em z = 0 (ordem |m|) precisam coincidir com um
    zero de φ3 de mesma ordem. Quando u é constante e φ3 é Laurent, a tripla
    resultante é guardada em forma Laurent exata.
    """
    _exigir_origem(carrier)
    if pair.fator == 0:
        raise RepresentationError("fator nulo em g")
    if carrier.e_disco:
        if pair.u.k_min < 0 and np.any(pair.u.coefs[:max(0, -pair.u.k_min)] != 0):
            raise RepresentationError("u com potências negativas no disco")
        ordem = pair.eta3.ordem_origem()
        if ordem < 0:
            raise RepresentationError("φ3 com polo no disco")
        if pair.m != 0 and ordem != abs(pair.m):
            raise RepresentationError(
                f"zeros/polos de g (ordem {abs(pair.m)}) não coincidem com o zero de φ3 (ordem {ordem})")
        if pair.m == 0 and ordem > 0:
            raise RepresentationError("φ3 se anula onde g não tem zero nem polo (ponto de ramificação)")

    u_constante = not np.any(pair.u.coefs[pair.u.indices != 0])
    if u_constante and isinstance(pair.eta3, LaurentPoly):
        c = pair.fator * np.exp(pair.u.coeficiente(0))
        menos = pair.eta3.deslocar(-pair.m).escalar(1.0 / c)
        mais = pair.eta3.deslocar(pair.m).escalar(c)
        phi1 = (menos - mais).escalar(0.5)
        phi2 = (menos + mais).escalar(0.5j)
        return WeierstrassTriple(carrier=carrier, forma="laurent",
                                 componentes=(phi1, phi2, pair.eta3), par=pair)
    return WeierstrassTriple(carrier=carrier, forma="gauss", par=pair)


def triple_from_laurent(carrier: Domain, phi1: LaurentPoly, phi2: LaurentPoly,
                        phi3: LaurentPoly) -> WeierstrassTriple:
    _exigir_origem(carrier)
    return WeierstrassTriple(carrier=carrier, forma="laurent", componentes=(phi1, phi2, phi3))


def catenoid_triple(carrier: Domain) -> WeierstrassTriple:
    """g = z, φ3 = dz/z"""
    return from_gauss_pair(GaussPair(u=LaurentPoly.zero(), eta3=LaurentPoly.monomio(-1), m=1), carrier)


def enneper_triple(carrier: Domain) -> WeierstrassTriple:
    """g = z, φ3 = z dz"""
    return from_gauss_pair(GaussPair(u=LaurentPoly.zero(), eta3=LaurentPoly.monomio(1), m=1), carrier)


def plane_triple(carrier: Domain) -> WeierstrassTriple:
    """φ = (dz, i dz, 0)"""
    return triple_from_laurent(carrier, LaurentPoly.monomio(0), LaurentPoly.monomio(0, 1j), LaurentPoly.zero())


# ---------------------------------------------------------------------------
# Verificações pontuais
# ---------------------------------------------------------------------------

def _amostras(grid_ou_pontos) -> np.ndarray:
    if isinstance(grid_ou_pontos, Grid):
        return grid_ou_pontos.nodes
    return np.asarray(grid_ou_pontos, dtype=complex).ravel()


def isotropy_residual(triple, grid) -> float:
    """sup |φ1² + φ2² + φ3²| / Σ|φ_j|²"""
    valores = triple.avaliar(_amostras(grid))
    soma = np.sum(valores ** 2, axis=0)
    norma = np.sum(np.abs(valores) ** 2, axis=0)
    return float(np.max(np.abs(soma) / norma))


def lorentz_residual(psi, grid) -> float:
    """sup |−ψ1² + ψ2² + ψ3²| / Σ|ψ_j|²"""
    valores = psi.avaliar(_amostras(grid))
    soma = -valores[0] ** 2 + valores[1] ** 2 + valores[2] ** 2
    norma = np.sum(np.abs(valores) ** 2, axis=0)
    return float(np.max(np.abs(soma) / norma))


def induced_metric(triple, grid: Grid) -> MetricField:
    valores = triple.avaliar(grid.nodes)
    lambda2 = np.sum(np.abs(valores) ** 2, axis=0)
    invalidos = ~np.isfinite(lambda2) | (lambda2 <= TOLERANCIAS["ramificacao"])
    if np.any(invalidos):
        no = int(np.nonzero(invalidos)[0][0])
        raise BranchPointError(f"métrica degenerada no nó {no} (z={grid.nodes[no]:.6g})", no=no)
    return MetricField(grid=grid, lambda2=lambda2.reshape(grid.z.shape))


def gauss_map(triple, grid) -> GaussMapReport:
    valores = triple.avaliar(_amostras(grid))
    denominador = valores[0] - 1j * valores[1]
    if np.all(np.abs(denominador) == 0):
        raise RepresentationError("φ1 − iφ2 identicamente nulo")
    tol = TOLERANCIAS["zero_phi3"]
    with np.errstate(divide="ignore", invalid="ignore"):
        g = valores[2] / denominador
    modulo = np.abs(g)
    return GaussMapReport(
        amostras=g,
        min_abs=float(np.nanmin(modulo)),
        max_abs=float(np.nanmax(np.where(np.isfinite(modulo), modulo, np.inf))),
        sem_zeros=bool(np.all(np.abs(valores[2]) > tol)),
        sem_polos=bool(np.all(np.abs(denominador) > tol)),
    )


def periods(triple, cycle: Cycle) -> np.ndarray:
    """∮ φ_j sobre o ciclo (vetor complexo de 3 componentes)"""
    return cycle.integrar(triple.avaliar(cycle.amostras))


def flux(triple, cycle: Cycle) -> np.ndarray:
    return np.imag(periods(triple, cycle))


def numero_de_voltas(valores: np.ndarray) -> int:
    """Número de voltas em torno de 0 de uma curva fechada amostrada"""
    fase = np.unwrap(np.angle(np.append(valores, valores[0])))
    return int(round((fase[-1] - fase[0]) / (2 * np.pi)))


def phi3_minimo(triple, grid) -> float:
    return float(np.min(np.abs(triple.phi3.avaliar(_amostras(grid)))))


# ---------------------------------------------------------------------------
# Integração da imersão
# ---------------------------------------------------------------------------

_GL_X, _GL_W = legendre.leggauss(QUADRATURA["nos_gauss_legendre"])


def _integrais_acumuladas(triple, pontos_quebra: np.ndarray, caminho) -> np.ndarray:
    """
    Integrais acumuladas de φ ao longo de um caminho parametrizado em t.

    `caminho(t)` devolve (z, dz/dt) para cada t; o resultado tem forma
    (3, ..., len(pontos_quebra)) e começa em zero.
    """
    a = pontos_quebra[:-1]
    b = pontos_quebra[1:]
    meio = 0.5 * (a + b)
    semi = 0.5 * (b - a)
    t = meio[:, None] + semi[:, None] * _GL_X[None, :]
    z, dz = caminho(t)
    valores = triple.avaliar(z) * dz
    segmentos = np.sum(valores * _GL_W, axis=-1) * semi
    acumulado = np.cumsum(segmentos, axis=-1)
    zeros = np.zeros(acumulado.shape[:-1] + (1,), dtype=complex)
    return np.concatenate([zeros, acumulado], axis=-1)


def integrate_along_path(triple, pontos) -> np.ndarray:
    """∫ φ ao longo de uma poligonal (Gauss-Legendre por segmento)"""
    p = np.asarray(pontos, dtype=complex)
    total = np.zeros(3, dtype=complex)
    for a, b in zip(p[:-1], p[1:]):
        t = 0.5 * (_GL_X + 1)
        z = a + (b - a) * t
        total += triple.avaliar(z) @ (0.5 * _GL_W) * (b - a)
    return total


def _origem_do_periodo(matriz: Optional[np.ndarray], j: int) -> str:
    """Qual período de φ aparece como período real da componente j de ψ = A·φ"""
    if matriz is None:
        return f"período real de φ{j + 1}"
    k = int(np.argmax(np.abs(matriz[j])))
    tipo = "imaginário" if abs(matriz[j, k].real) < abs(matriz[j, k].imag) else "real"
    return f"período {tipo} de φ{k + 1}"


def verificar_periodos(triple, tol: Optional[float] = None) -> None:
    carrier = triple.carrier
    if carrier.e_disco:
        return
    tol = tol or TOLERANCIAS["periodo"]
    matriz = triple.matriz if isinstance(triple, TriplaTransformada) else None
    per = periods(triple, generator_cycle(carrier))
    for j, valor in enumerate(np.real(per)):
        if abs(valor) > tol:
            raise WellDefinednessError(
                f"componente {j + 1} não fecha ({_origem_do_periodo(matriz, j)}): {valor:.6g}",
                periodo=float(valor), componente=j + 1)


def integrate_immersion(triple, basepoint: complex, grid: Grid,
                        prescribed_h: Optional[np.ndarray] = None,
                        tol: Optional[float] = None) -> ImmersionField:
    """
    X = Re ∫_{P0} φ por caminhos radial-depois-angular na grade, com X(P0) = 0.

    Com `prescribed_h`, exige |X3 − h| <= tol em todos os nós.
    """
    if not triple.carrier.contem(basepoint, tol=1e-12):
        raise PreconditionError(f"ponto base {basepoint} fora do portador")
    # numa grade de disco todo laço é contrátil dentro da grade
    if not grid.parent.e_disco:
        verificar_periodos(triple)

    centro = grid.parent.center
    rho0 = abs(basepoint - centro)
    alfa0 = float(np.angle(basepoint - centro)) % (2 * np.pi) if rho0 > 0 else 0.0
    direcao = np.exp(1j * alfa0)

    # trecho radial ao longo do raio de ângulo alfa0
    quebras_r = np.unique(np.concatenate([grid.radii, [rho0]]))
    radial = _integrais_acumuladas(
        triple, quebras_r, lambda t: (centro + t * direcao, np.full(t.shape, direcao)))
    idx_r = np.searchsorted(quebras_r, grid.radii)
    idx_0 = np.searchsorted(quebras_r, rho0)
    F = radial[:, idx_r] - radial[:, [idx_0]]

    # trecho angular em cada círculo
    quebras_t = np.unique(np.concatenate([grid.angles, [alfa0]]))
    raios = grid.radii[:, None, None]

    def arco(t):
        e = np.exp(1j * t)[None, :, :]
        return centro + raios * e, 1j * raios * e

    angular = _integrais_acumuladas(triple, quebras_t, arco)
    idx_t = np.searchsorted(quebras_t, grid.angles)
    idx_a = np.searchsorted(quebras_t, alfa0)
    G = angular[..., idx_t] - angular[..., [idx_a]]

    valores = np.real(F[:, :, None] + G)
    erro_h = None
    if prescribed_h is not None:
        h = np.asarray(prescribed_h, dtype=float).reshape(grid.z.shape)
        diferenca = np.abs(valores[2] - h)
        erro_h = float(diferenca.max())
        limite = tol or TOLERANCIAS["integracao"]
        if erro_h > limite:
            no = int(np.argmax(diferenca))
            logger.warning("Terceira coordenada difere de h", erro=erro_h, no=no)
            raise VerificationFailure(f"|X3 − h| = {erro_h:.3g} excede {limite:.3g}", no_pior=no, margem=erro_h)
    return ImmersionField(grid=grid, valores=valores, basepoint=basepoint, erro_h=erro_h)


# ---------------------------------------------------------------------------
# Troca para superfícies maximais
# ---------------------------------------------------------------------------

MATRIZES_TROCA = {
    # ψ = (φ3, −iφ2, −iφ1): Y = (X3, X2*, X1*)
    "first": np.array([[0, 0, 1], [0, -1j, 0], [-1j, 0, 0]], dtype=complex),
    # ψ = (−iφ1, φ3, φ2): Z = (X1*, X3, X2)
    "second": np.array([[-1j, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex),
}


def maximal_swap(triple: WeierstrassTriple, basepoint: complex, grid: Grid,
                 mode: str = "first") -> Tuple[TriplaTransformada, ImmersionField]:
    if mode not in MATRIZES_TROCA:
        raise RepresentationError(f"modo de troca desconhecido: {mode}")
    psi = TriplaTransformada(base=triple, matriz=MATRIZES_TROCA[mode], modo=mode)
    campo = integrate_immersion(psi, basepoint, grid)
    logger.info("Troca maximal concluída", modo=mode, residuo_lorentz=lorentz_residual(psi, grid))
    return psi, campo
