"""
Motor de aproximação de Laurent em anéis e discos.

Ajusta dados de Weierstrass globais a alvos definidos por partes num
conjunto admissível S (região U, labirinto 𝒦, arcos), resolvendo nas
variáveis de Gauss g = z^m e^u para que a isotropia seja identidade
algébrica. Restrições de período/fluxo são impostas por Newton nos
coeficientes de u que casam com o resíduo de cada integral.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from configuracao import APROXIMACAO, TOLERANCIAS
from dominio_plano import Domain, Grid, generator_cycle, sample_grid
from erros import (ApproximationBudgetError, ConfigError, FluxMatchingError, PeriodSolverError,
                   PreconditionError, RepresentationError)
from labirinto import LabyrinthSpec, amostras_bandas
from nucleo_weierstrass import (ExpLaurent, Forma, GaussPair, LaurentPoly, WeierstrassTriple,
                                flux, from_gauss_pair, integrate_along_path, isotropy_residual,
                                numero_de_voltas, periods)

logger = structlog.get_logger()

REGIAO_U, REGIAO_K, REGIAO_ARCO = 0, 1, 2


@dataclass(eq=False)
class BlendTarget:
    """
    Alvo de aproximação em S.

    `u_alvo` é o logaritmo de g/z^m num ramo contínuo em cada componente de S;
    `valores` guarda (φ1, φ2, φ3)/dz alvo para o relatório de resíduos.
    """

    pontos: np.ndarray
    pesos: np.ndarray
    regiao: np.ndarray
    u_alvo: np.ndarray
    valores: np.ndarray
    m: int = 0
    phi3: Optional[Forma] = None
    fix_phi3: bool = True
    nonvanishing_phi3: bool = False
    f_alvo: Optional[np.ndarray] = None
    m3: int = 0
    phi3_alvo: Optional[np.ndarray] = None
    fluxo: Optional[np.ndarray] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        norma = np.sum(np.abs(self.valores) ** 2, axis=0)
        if np.any(norma <= 0):
            raise PreconditionError("Σ|φ_j|² se anula em S")
        isotropia = np.abs(np.sum(self.valores ** 2, axis=0)) / norma
        if np.max(isotropia) > 1e-8:
            raise RepresentationError(f"alvo não isotrópico (resíduo {np.max(isotropia):.3g})")
        if self.fix_phi3 and self.phi3 is None:
            raise PreconditionError("fix_phi3 exige φ3 global")
        if not (self.fix_phi3 or self.nonvanishing_phi3) and self.phi3_alvo is None:
            raise ConfigError("φ3 livre exige amostras alvo de φ3", campo="phi3_alvo")


@dataclass(eq=False)
class MarkedArcData:
    pontos: np.ndarray            # α(s), incluindo as extremidades
    tangentes: np.ndarray         # α'(s)
    pesos: np.ndarray             # ds (zero nas extremidades)
    dX: np.ndarray                # (3, n) = Re das amostras combinadas
    normais: np.ndarray           # (3, n) ϖ unitário
    combinado: np.ndarray         # (3, n) dX(α') + i ϖ·|dX(α')|
    fluxo_obtido: np.ndarray
    parametros: Tuple[float, float]


@dataclass(eq=False)
class BlendResult:
    tripla: WeierstrassTriple
    grau: int
    residuo_ponderado: float
    desvio_U: float
    desvio_K: float
    erro_fluxo: float
    erro_periodo: float
    isotropia: float
    phi3_min: Optional[float]
    iteracoes_newton: int

    def to_dict(self) -> Dict:
        return {"grau": self.grau, "residuo_ponderado": self.residuo_ponderado,
                "desvio_U": self.desvio_U, "desvio_K": self.desvio_K,
                "erro_fluxo": self.erro_fluxo, "erro_periodo": self.erro_periodo,
                "isotropia": self.isotropia, "phi3_min": self.phi3_min,
                "iteracoes_newton": self.iteracoes_newton}


# ---------------------------------------------------------------------------
# Construção de alvos
# ---------------------------------------------------------------------------

def como_exp(forma: Forma) -> ExpLaurent:
    """Escreve φ3 como z^m e^f quando possível (monômio ou forma exponencial)"""
    if isinstance(forma, ExpLaurent):
        return forma
    nao_nulos = np.nonzero(forma.coefs)[0]
    if len(nao_nulos) != 1:
        raise RepresentationError("φ3 não é monômio nem exponencial; forma não nula indisponível")
    k = int(forma.k_min + nao_nulos[0])
    return ExpLaurent(LaurentPoly.constante(np.log(forma.coefs[nao_nulos[0]])), k)


def log_ao_longo_dos_raios(valores: np.ndarray, grade: Grid) -> Tuple[np.ndarray, int]:
    """
    Ramo contínuo de log(φ3/z^m3) nos nós de uma grade polar.

    A fase é desenrolada primeiro ao longo da linha i = 0 (o centro no disco,
    o círculo interno no anel) e depois ao longo de cada raio.
    """
    v = np.asarray(valores, dtype=complex).reshape(grade.radial_count, grade.angular_count)
    if np.min(np.abs(v)) <= TOLERANCIAS["zero_phi3"]:
        raise PreconditionError("φ3 se anula na região: não há logaritmo")
    m3 = 0
    if not grade.parent.e_disco and grade.parent.center == 0:
        m3 = numero_de_voltas(v[0])
        v = v / grade.z ** m3
    logaritmo = np.log(v)
    fase = np.imag(logaritmo)
    fase[0] = np.unwrap(fase[0])
    fase = np.unwrap(fase, axis=0)
    return (np.real(logaritmo) + 1j * fase).ravel(), m3


def alvo_de_tripla(triple: WeierstrassTriple, pontos: np.ndarray, pesos: Optional[np.ndarray] = None,
                   regiao: Optional[np.ndarray] = None, fix_phi3: bool = True,
                   nonvanishing_phi3: bool = False, epsilon: Optional[float] = None,
                   grade: Optional[Grid] = None) -> BlendTarget:
    """
    Alvo dado pela restrição de uma tripla global (com par de Gauss) a S.

    No modo não nulo, φ3 = z^m3 e^f: f vem da forma exponencial quando ela
    existe e, senão, do logaritmo contínuo sobre `grade` (cujos nós são os
    `pontos`).
    """
    if triple.par is None:
        raise RepresentationError("a tripla alvo precisa de um par de Gauss")
    par = triple.par
    pontos = np.asarray(pontos, dtype=complex).ravel()
    pesos = np.ones(len(pontos)) if pesos is None else np.asarray(pesos, dtype=float)
    regiao = np.zeros(len(pontos), dtype=int) if regiao is None else np.asarray(regiao)
    u_alvo = par.u.avaliar(pontos) + np.log(complex(par.fator))
    fluxo = None
    if not triple.carrier.e_disco:
        fluxo = flux(triple, generator_cycle(triple.carrier))
    f_alvo, m3 = None, 0
    if nonvanishing_phi3:
        try:
            exp3 = como_exp(par.eta3)
            f_alvo, m3 = exp3.f.avaliar(pontos), exp3.m
        except RepresentationError:
            if grade is None:
                raise
            f_alvo, m3 = log_ao_longo_dos_raios(par.eta3.avaliar(pontos), grade)
    return BlendTarget(pontos=pontos, pesos=pesos, regiao=regiao, u_alvo=u_alvo,
                       valores=triple.avaliar(pontos), m=par.m, phi3=par.eta3,
                       fix_phi3=fix_phi3, nonvanishing_phi3=nonvanishing_phi3,
                       f_alvo=f_alvo, m3=m3, phi3_alvo=par.eta3.avaliar(pontos), fluxo=fluxo, epsilon=epsilon)


def alvo_labirinto(par_X: GaussPair, pontos_U: np.ndarray, labirintos: Sequence[LabyrinthSpec],
                   Ms: Sequence[float], fluxo: Optional[np.ndarray] = None,
                   nonvanishing_phi3: bool = False, epsilon: Optional[float] = None) -> BlendTarget:
    """
    Alvo do passo de completude: g de X em U e g ≡ M em cada labirinto.

    φ3 é o de X (fixo, ou aproximado em forma exponencial no modo não nulo).
    """
    pontos_U = np.asarray(pontos_U, dtype=complex).ravel()
    partes_p, partes_u, partes_r, partes_w = [pontos_U], [], [np.full(len(pontos_U), REGIAO_U)], []
    partes_u.append(par_X.u.avaliar(pontos_U) + np.log(complex(par_X.fator)))
    partes_w.append(np.full(len(pontos_U), APROXIMACAO["peso_regiao"]))
    for spec, M in zip(labirintos, Ms):
        z, _, argumento = amostras_bandas(spec)
        log_z = np.log(np.abs(z)) + 1j * argumento
        partes_p.append(z)
        partes_u.append(np.log(M) - par_X.m * log_z)
        partes_r.append(np.full(len(z), REGIAO_K))
        partes_w.append(np.full(len(z), APROXIMACAO["peso_labirinto"]))

    pontos = np.concatenate(partes_p)
    u_alvo = np.concatenate(partes_u)
    phi3_vals = par_X.eta3.avaliar(pontos)
    g = np.exp(u_alvo) * pontos ** par_X.m
    valores = np.stack([0.5 * (1 / g - g) * phi3_vals, 0.5j * (1 / g + g) * phi3_vals, phi3_vals])

    f_alvo, m3 = None, 0
    if nonvanishing_phi3:
        exp3 = como_exp(par_X.eta3)
        m3 = exp3.m
        f_alvo = np.full(len(pontos), np.nan, dtype=complex)
        f_alvo[:len(pontos_U)] = exp3.f.avaliar(pontos_U)

    return BlendTarget(pontos=pontos, pesos=np.concatenate(partes_w), regiao=np.concatenate(partes_r),
                       u_alvo=u_alvo, valores=valores, m=par_X.m, phi3=par_X.eta3,
                       fix_phi3=not nonvanishing_phi3, nonvanishing_phi3=nonvanishing_phi3,
                       f_alvo=f_alvo, m3=m3, fluxo=fluxo, epsilon=epsilon)


def alvo_de_arco(marcado: MarkedArcData, m: int, u_inicio: complex) -> Tuple[np.ndarray, np.ndarray]:
    """
    Amostras (pontos, u) do dado marcado ao longo do arco, no ramo que
    começa em `u_inicio` (valor de u do par em P1).
    """
    c = marcado.combinado
    with np.errstate(divide="ignore", invalid="ignore"):
        g = c[2] / (c[0] - 1j * c[1])
    z = marcado.pontos
    bruto = np.log(g) - m * np.log(z)
    parte_imag = np.unwrap(np.imag(bruto))
    u = np.real(bruto) + 1j * parte_imag
    u += 2j * np.pi * round((np.imag(u_inicio) - parte_imag[0]) / (2 * np.pi))
    return z, u


def alvo_de_regiao_e_arco(triple: WeierstrassTriple, regiao: Domain, pontos_U: np.ndarray,
                          marcado: MarkedArcData, retorno: Sequence[complex],
                          fluxo: Optional[np.ndarray] = None) -> BlendTarget:
    """
    Alvo do passo de alça: X numa região U sem a origem mais o dado marcado
    ao longo do arco que fecha U num anel em torno da origem.

    O expoente m do alvo é o número de voltas de g no laço arco + retorno,
    para que u seja univalente no novo portador.
    """
    if triple.par is None:
        raise RepresentationError("a tripla alvo precisa de um par de Gauss")
    if regiao.contem(0j):
        raise PreconditionError("a região do passo de alça não pode conter a origem")
    par = triple.par
    pontos_U = np.asarray(pontos_U, dtype=complex).ravel()
    retorno = np.asarray(retorno, dtype=complex)
    c = marcado.combinado
    with np.errstate(divide="ignore", invalid="ignore"):
        g_arco = c[2] / (c[0] - 1j * c[1])
    m = numero_de_voltas(np.concatenate([g_arco, par.g(retorno[1:-1])]))

    def log_z(z):
        # ramo contínuo em U: Re(z / centro) > 0 em todo disco que não contém 0
        return np.log(complex(regiao.center)) + np.log(z / regiao.center)

    deslocamento = np.log(complex(par.fator))
    u_U = par.u.avaliar(pontos_U) + deslocamento + (par.m - m) * log_z(pontos_U)
    P1 = marcado.pontos[0]
    u_P1 = complex(par.u.avaliar(P1)) + deslocamento + (par.m - m) * complex(log_z(P1))
    pontos_arco, u_arco = alvo_de_arco(marcado, m, u_P1)

    n_U, n_arco = len(pontos_U), len(pontos_arco)
    pontos = np.concatenate([pontos_U, pontos_arco])
    return BlendTarget(
        pontos=pontos,
        pesos=np.concatenate([np.full(n_U, APROXIMACAO["peso_regiao"]), np.full(n_arco, APROXIMACAO["peso_arco"])]),
        regiao=np.concatenate([np.full(n_U, REGIAO_U), np.full(n_arco, REGIAO_ARCO)]),
        u_alvo=np.concatenate([u_U, u_arco]),
        valores=np.concatenate([triple.avaliar(pontos_U), c / marcado.tangentes], axis=1),
        m=m, phi3=par.eta3, fix_phi3=True, fluxo=fluxo)


# ---------------------------------------------------------------------------
# Ajuste por colocação
# ---------------------------------------------------------------------------

def _indices_base(carrier: Domain, grau: int) -> np.ndarray:
    if carrier.e_disco:
        return np.arange(0, grau + 1)
    return np.arange(-grau, grau + 1)


def _matriz_base(z: np.ndarray, indices: np.ndarray, carrier: Domain) -> np.ndarray:
    """Colunas (z/R)^k para k >= 0 e (r/z)^|k| para k < 0, limitadas por 1 no portador"""
    B = np.empty((len(z), len(indices)), dtype=complex)
    positivos = indices >= 0
    B[:, positivos] = (z[:, None] / carrier.outer_radius) ** indices[positivos][None, :]
    if np.any(~positivos):
        B[:, ~positivos] = (carrier.inner_radius / z[:, None]) ** (-indices[~positivos])[None, :]
    return B


def _desescalar(c: np.ndarray, indices: np.ndarray, carrier: Domain) -> LaurentPoly:
    escala = np.where(indices >= 0,
                      carrier.outer_radius ** (-indices.astype(float)),
                      (carrier.inner_radius or 1.0) ** (-indices.astype(float)))
    return LaurentPoly((c * escala).astype(complex), int(indices[0]))


def ajustar_laurent(z: np.ndarray, alvo: np.ndarray, pesos: np.ndarray, carrier: Domain,
                    grau: int) -> Tuple[LaurentPoly, float]:
    """Mínimos quadrados ponderados; devolve o polinômio e o resíduo RMS ponderado"""
    indices = _indices_base(carrier, grau)
    B = _matriz_base(z, indices, carrier)
    raiz = np.sqrt(pesos)
    c, _, _, _ = np.linalg.lstsq(raiz[:, None] * B, raiz * alvo, rcond=None)
    residuo = float(np.sqrt(np.sum(pesos * np.abs(B @ c - alvo) ** 2) / np.sum(pesos)))
    return _desescalar(c, indices, carrier), residuo


# ---------------------------------------------------------------------------
# Correção de períodos
# ---------------------------------------------------------------------------

def _indices_newton(m: int, m3: int) -> List[int]:
    j1 = m - m3 - 1
    j2 = -1 - m - m3
    return [j1, j2] if j1 != j2 else [j1, j1 + 1]


def corrigir_periodos(par: GaussPair, carrier: Domain, fluxo: np.ndarray,
                      incluir_phi3: bool = False, max_iter: Optional[int] = None) -> Tuple[GaussPair, int]:
    """
    Newton amortecido para ∮φ3/g = p2 + i p1, ∮gφ3 = p2 − i p1 (e, no modo
    não nulo, ∮φ3 = i p3) no ciclo gerador do portador.
    """
    ciclo = generator_cycle(carrier)
    z = ciclo.amostras
    p1, p2, p3 = (float(v) for v in fluxo)
    m3 = numero_de_voltas(par.eta3.avaliar(z))
    idx_u = _indices_newton(par.m, m3)
    idx_f = -1 - m3

    def montar(theta: np.ndarray) -> GaussPair:
        u = par.u
        for k, j in enumerate(idx_u):
            u = u + LaurentPoly.monomio(j, theta[k])
        eta3 = par.eta3
        if incluir_phi3:
            exp3 = como_exp(eta3)
            eta3 = ExpLaurent(exp3.f + LaurentPoly.monomio(idx_f, theta[len(idx_u)]), exp3.m)
        return GaussPair(u=u, eta3=eta3, m=par.m, fator=par.fator)

    def restricoes(theta: np.ndarray) -> np.ndarray:
        candidato = montar(theta)
        phi3 = candidato.eta3.avaliar(z)
        g = candidato.g(z)
        r = [ciclo.integrar(phi3 / g) - (p2 + 1j * p1), ciclo.integrar(g * phi3) - (p2 - 1j * p1)]
        if incluir_phi3:
            r.append(ciclo.integrar(phi3) - 1j * p3)
        return np.array(r)

    n = len(idx_u) + (1 if incluir_phi3 else 0)
    theta = np.zeros(n, dtype=complex)
    r = restricoes(theta)
    norma = float(np.max(np.abs(r)))
    tol = TOLERANCIAS["restricao_periodo"]
    limite = APROXIMACAO["newton_max_iter"] if max_iter is None else max_iter
    h = APROXIMACAO["passo_jacobiano"]
    iteracao = 0
    while norma > tol:
        if iteracao >= limite:
            raise PeriodSolverError(f"Newton não convergiu em {iteracao} iterações", residuo=norma)
        J = np.empty((len(r), n), dtype=complex)
        for k in range(n):
            e = np.zeros(n, dtype=complex)
            e[k] = h
            J[:, k] = (restricoes(theta + e) - r) / h
        passo, _, _, _ = np.linalg.lstsq(J, -r, rcond=None)
        fator = 1.0
        for _ in range(APROXIMACAO["newton_max_cortes"]):
            novo = theta + fator * passo
            r_novo = restricoes(novo)
            norma_nova = float(np.max(np.abs(r_novo)))
            if np.isfinite(norma_nova) and norma_nova < norma:
                theta, r, norma = novo, r_novo, norma_nova
                break
            fator *= APROXIMACAO["newton_amortecimento"]
        else:
            raise PeriodSolverError("Newton estagnou (resíduo não diminui)", residuo=norma)
        iteracao += 1
    return montar(theta), iteracao


# ---------------------------------------------------------------------------
# Blend
# ---------------------------------------------------------------------------

def _grade_verificacao(carrier: Domain):
    return sample_grid(carrier, 16, 64)


def blend_em_grau(target: BlendTarget, grau: int, carrier: Domain,
                  max_iter: Optional[int] = None) -> BlendResult:
    if grau > APROXIMACAO["grau_maximo"]:
        raise PreconditionError(f"grau {grau} acima do limite {APROXIMACAO['grau_maximo']}")
    if carrier.center != 0:
        raise PreconditionError("portador deve estar centrado na origem")
    if not np.all(carrier.contem(target.pontos, tol=1e-9)):
        raise PreconditionError("S não está contido no portador W")

    u, residuo = ajustar_laurent(target.pontos, target.u_alvo, target.pesos, carrier, grau)

    if target.fix_phi3:
        eta3 = target.phi3
    elif target.nonvanishing_phi3:
        definidos = np.isfinite(target.f_alvo)
        if np.any(definidos):
            f, _ = ajustar_laurent(target.pontos[definidos], target.f_alvo[definidos],
                                   target.pesos[definidos], carrier, grau)
        else:
            f = como_exp(target.phi3).f
        eta3 = ExpLaurent(f, target.m3)
    else:
        eta3, _ = ajustar_laurent(target.pontos, target.phi3_alvo, target.pesos, carrier, grau)

    par = GaussPair(u=u, eta3=eta3, m=target.m)
    iteracoes = 0
    if not carrier.e_disco and target.fluxo is not None:
        par, iteracoes = corrigir_periodos(par, carrier, target.fluxo,
                                           incluir_phi3=target.nonvanishing_phi3, max_iter=max_iter)

    tripla = from_gauss_pair(par, carrier)
    return _resultado(tripla, target, grau, residuo, iteracoes)


def _resultado(tripla: WeierstrassTriple, target: BlendTarget, grau: int, residuo: float,
               iteracoes: int) -> BlendResult:
    relatorio = residual_report_valores(tripla, target)
    grade = _grade_verificacao(tripla.carrier)
    phi3_min = None
    if target.nonvanishing_phi3:
        phi3_min = float(np.min(np.abs(tripla.phi3.avaliar(grade.nodes))))
    return BlendResult(tripla=tripla, grau=grau, residuo_ponderado=residuo,
                       desvio_U=relatorio["desvio_U"], desvio_K=relatorio["desvio_K"],
                       erro_fluxo=relatorio["erro_fluxo"], erro_periodo=relatorio["erro_periodo"],
                       isotropia=isotropy_residual(tripla, grade), phi3_min=phi3_min,
                       iteracoes_newton=iteracoes)


def blend(target: BlendTarget, grau: int, carrier: Domain, max_iter: Optional[int] = None) -> BlendResult:
    """
    Aproxima o alvo por uma tripla holomorfa em W.

    Com `target.epsilon`, percorre os graus escalonados até `grau` e para no
    primeiro que atinge ε em U; sem ε, ajusta diretamente no grau pedido.
    """
    if target.epsilon is None:
        return blend_em_grau(target, grau, carrier, max_iter=max_iter)
    graus = [k for k in APROXIMACAO["graus_escalonados"] if k < grau] + [grau]
    melhor: Optional[BlendResult] = None
    for k in graus:
        resultado = blend_em_grau(target, k, carrier, max_iter=max_iter)
        logger.debug("Blend avaliado", grau=k, desvio_U=resultado.desvio_U)
        if resultado.desvio_U <= target.epsilon:
            return resultado
        if melhor is None or resultado.desvio_U < melhor.desvio_U:
            melhor = resultado
    logger.warning("Orçamento de aproximação excedido", epsilon=target.epsilon, obtido=melhor.desvio_U)
    raise ApproximationBudgetError(
        f"desvio {melhor.desvio_U:.3g} em U acima de ε = {target.epsilon:.3g} até o grau {grau}",
        residuo=melhor.desvio_U)


def residual_report_valores(tripla, target: BlendTarget) -> Dict:
    valores = tripla.avaliar(target.pontos)
    diferenca = np.abs(valores - target.valores)
    norma = np.linalg.norm(valores - target.valores, axis=0)
    em_U = target.regiao == REGIAO_U
    em_K = target.regiao == REGIAO_K
    no_arco = target.regiao == REGIAO_ARCO
    erro_fluxo = 0.0
    erro_periodo = 0.0
    if not tripla.carrier.e_disco and target.fluxo is not None:
        per = periods(tripla, generator_cycle(tripla.carrier))
        erro_fluxo = float(np.max(np.abs(np.imag(per) - target.fluxo)))
        erro_periodo = float(np.max(np.abs(np.real(per))))
    return {
        "desvio_por_componente": [float(v) for v in diferenca.max(axis=1)],
        "desvio_U": float(norma[em_U].max()) if np.any(em_U) else 0.0,
        "desvio_K": float(norma[em_K].max()) if np.any(em_K) else 0.0,
        "desvio_arco": float(norma[no_arco].max()) if np.any(no_arco) else 0.0,
        "erro_fluxo": erro_fluxo,
        "erro_periodo": erro_periodo,
    }


def residual_report(result: BlendResult, target: BlendTarget) -> Dict:
    relatorio = residual_report_valores(result.tripla, target)
    relatorio["isotropia_W"] = isotropy_residual(result.tripla, _grade_verificacao(result.tripla.carrier))
    return relatorio


# ---------------------------------------------------------------------------
# Extensão ao longo de arcos
# ---------------------------------------------------------------------------

def _perfil(s: np.ndarray, delta: float = 0.2) -> np.ndarray:
    def degrau(x):
        x = np.clip(x, 0.0, 1.0)
        return 3 * x ** 2 - 2 * x ** 3
    return degrau(s / delta) * degrau((1 - s) / delta)


def _decompor(c: np.ndarray, q: complex) -> Tuple[float, float]:
    """(τ, ψ) de uma amostra isotrópica c com terceira componente q"""
    T = np.real(c)
    w = np.imag(c)
    normal = np.cross(T, w)
    normal = normal / np.linalg.norm(normal)
    horizontal = math.hypot(normal[0], normal[1])
    return normal[2] / horizontal, math.atan2(normal[1], normal[0])


def _amostras_combinadas(q: np.ndarray, tau: np.ndarray, psi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    kappa = np.sqrt(1 + tau ** 2)
    n3 = tau / kappa
    rho_n = 1 / kappa
    sigma = kappa * np.abs(q)
    e_a = np.stack([-np.sin(psi), np.cos(psi), np.zeros_like(psi)])
    e_b = np.stack([-n3 * np.cos(psi), -n3 * np.sin(psi), rho_n])
    sen_chi = np.real(q) / np.abs(q)
    cos_chi = np.imag(q) / np.abs(q)
    tangente = cos_chi * e_a + sen_chi * e_b
    normal = cos_chi * e_b - sen_chi * e_a
    return sigma * tangente, normal, sigma * (tangente + 1j * normal)


def extend_along_arc(triple: WeierstrassTriple, arco: Sequence[complex], flux_target: Sequence[float],
                     retorno: Optional[Sequence[complex]] = None,
                     max_iter: Optional[int] = None) -> MarkedArcData:
    """
    Dado marcado ao longo de γ: terceira componente φ3(α)α', extremidades
    compatíveis com a tripla e normais ajustadas por rotação e inclinação
    para que o período imaginário do novo ciclo seja `flux_target`.

    `retorno` é a poligonal em U que fecha o ciclo (de P2 de volta a P1).
    """
    p = np.asarray(arco, dtype=complex)
    if len(p) < 3:
        raise PreconditionError("arco com poucos pontos")
    segmentos = np.diff(p)
    comprimentos = np.abs(segmentos)
    s_quebras = np.concatenate([[0.0], np.cumsum(comprimentos)]) / comprimentos.sum()
    ds = np.diff(s_quebras)

    pontos = np.concatenate([[p[0]], 0.5 * (p[:-1] + p[1:]), [p[-1]]])
    s = np.concatenate([[0.0], 0.5 * (s_quebras[:-1] + s_quebras[1:]), [1.0]])
    derivada = segmentos / ds
    tangentes = np.concatenate([[derivada[0]], derivada, [derivada[-1]]])
    pesos = np.concatenate([[0.0], ds, [0.0]])

    q = triple.phi3.avaliar(pontos) * tangentes
    if np.min(np.abs(q)) <= TOLERANCIAS["zero_phi3"]:
        raise PreconditionError("∂h se anula ao longo de γ")

    extremo_a = triple.avaliar(pontos[0]) * tangentes[0]
    extremo_b = triple.avaliar(pontos[-1]) * tangentes[-1]
    tau_a, psi_a = _decompor(extremo_a, q[0])
    tau_b, psi_b = _decompor(extremo_b, q[-1])
    psi_b = psi_a + (psi_b - psi_a + math.pi) % (2 * math.pi) - math.pi
    beta = _perfil(s)
    base_tau = tau_a + (tau_b - tau_a) * s
    base_psi = psi_a + (psi_b - psi_a) * s

    alvo = np.asarray(flux_target, dtype=float)
    contribuicao = np.zeros(3)
    if retorno is not None:
        contribuicao = np.imag(integrate_along_path(triple, retorno))
    terceira = float(np.imag(integrate_along_path(triple, p)[2])) + contribuicao[2]
    if abs(terceira - alvo[2]) > TOLERANCIAS["fluxo"]:
        raise FluxMatchingError(
            f"terceira componente do fluxo é fixada por ∂h: {terceira:.6g} ≠ {alvo[2]:.6g}")
    d = alvo[:2] - contribuicao[:2]

    def horizontal(theta: np.ndarray) -> np.ndarray:
        tau = (1 - beta) * base_tau + beta * theta[0]
        psi = (1 - beta) * base_psi + beta * theta[1]
        _, normal, _ = _amostras_combinadas(q, tau, psi)
        sigma = np.sqrt(1 + tau ** 2) * np.abs(q)
        return np.sum(pesos * sigma * normal[:2], axis=1)

    # chute inicial pela solução com parâmetros constantes
    I = float(np.sum(pesos * np.imag(q)))
    R = float(np.sum(pesos * np.real(q)))
    modulo = float(np.hypot(*d))
    tau0 = math.sqrt(max(modulo ** 2 - R ** 2, 0.0) / max(I ** 2 + R ** 2, 1e-300))
    w0 = np.array([-tau0 * I, -math.sqrt(1 + tau0 ** 2) * R])
    psi0 = math.atan2(d[1], d[0]) - math.atan2(w0[1], w0[0])
    theta = np.array([tau0, psi0])

    limite = APROXIMACAO["newton_max_iter"] if max_iter is None else max_iter
    residuo = horizontal(theta) - d
    iteracao = 0
    while np.max(np.abs(residuo)) > 1e-10:
        if iteracao >= limite:
            raise FluxMatchingError(
                f"nenhum parâmetro atinge o fluxo alvo (resíduo {np.max(np.abs(residuo)):.3g})")
        J = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = 1e-7
            J[:, k] = (horizontal(theta + e) - horizontal(theta)) / 1e-7
        passo, _, _, _ = np.linalg.lstsq(J, -residuo, rcond=None)
        fator = 1.0
        norma = np.max(np.abs(residuo))
        for _ in range(APROXIMACAO["newton_max_cortes"]):
            novo = theta + fator * passo
            r_novo = horizontal(novo) - d
            if np.max(np.abs(r_novo)) < norma:
                theta, residuo = novo, r_novo
                break
            fator *= APROXIMACAO["newton_amortecimento"]
        else:
            raise FluxMatchingError("ajuste do fluxo estagnou")
        iteracao += 1

    tau = (1 - beta) * base_tau + beta * theta[0]
    psi = (1 - beta) * base_psi + beta * theta[1]
    dX, normais, combinado = _amostras_combinadas(q, tau, psi)
    obtido = contribuicao + np.sum(pesos * np.imag(combinado), axis=1)
    logger.info("Arco estendido", iteracoes=iteracao, fluxo=obtido.tolist())
    return MarkedArcData(pontos=pontos, tangentes=tangentes, pesos=pesos, dX=dX, normais=normais,
                         combinado=combinado, fluxo_obtido=obtido, parametros=(float(theta[0]), float(theta[1])))
