"""
Hierarquia de erros do pacote superficies_minimas.

Cada erro carrega o contexto numérico que o motivou (período, nó, resíduo)
para que o chamador possa registrá-lo no log estruturado.
"""

from typing import Any, Dict, List, Optional


class SuperficieMinimaError(Exception):
    """Erro base de todas as operações do pacote"""

    def contexto(self) -> Dict[str, Any]:
        return {}


class DomainDegenerateError(SuperficieMinimaError):
    pass


class ResolutionError(SuperficieMinimaError):
    pass


class RepresentationError(SuperficieMinimaError):
    pass


class WellDefinednessError(SuperficieMinimaError):
    """Período real (ou imaginário, na troca Lorentziana) não nulo"""

    def __init__(self, mensagem: str, periodo: float, componente: int):
        super().__init__(mensagem)
        self.periodo = periodo
        self.componente = componente

    def contexto(self) -> Dict[str, Any]:
        return {"periodo": self.periodo, "componente": self.componente}


class BranchPointError(SuperficieMinimaError):
    def __init__(self, mensagem: str, no: Optional[int] = None):
        super().__init__(mensagem)
        self.no = no

    def contexto(self) -> Dict[str, Any]:
        return {"no": self.no}


class LabyrinthFitError(SuperficieMinimaError):
    pass


class PreconditionError(SuperficieMinimaError):
    pass


class VerificationFailure(SuperficieMinimaError):
    def __init__(self, mensagem: str, no_pior: Optional[int] = None, margem: Optional[float] = None):
        super().__init__(mensagem)
        self.no_pior = no_pior
        self.margem = margem

    def contexto(self) -> Dict[str, Any]:
        return {"no_pior": self.no_pior, "margem": self.margem}


class FluxMatchingError(SuperficieMinimaError):
    pass


class ApproximationBudgetError(SuperficieMinimaError):
    def __init__(self, mensagem: str, residuo: float):
        super().__init__(mensagem)
        self.residuo = residuo

    def contexto(self) -> Dict[str, Any]:
        return {"residuo": self.residuo}


class PeriodSolverError(SuperficieMinimaError):
    def __init__(self, mensagem: str, residuo: float):
        super().__init__(mensagem)
        self.residuo = residuo

    def contexto(self) -> Dict[str, Any]:
        return {"residuo": self.residuo}


class ConnectivityError(SuperficieMinimaError):
    pass


class StageFailure(SuperficieMinimaError):
    """Falha de um estágio; `relatorios` guarda os estágios já concluídos"""

    def __init__(self, mensagem: str, relatorios: Optional[List[Any]] = None, diagnostico: Optional[Dict[str, Any]] = None):
        super().__init__(mensagem)
        self.relatorios = relatorios or []
        self.diagnostico = diagnostico or {}

    def contexto(self) -> Dict[str, Any]:
        return {"estagios_concluidos": len(self.relatorios), **self.diagnostico}


class NonvanishingViolation(SuperficieMinimaError):
    def __init__(self, mensagem: str, minimo: float):
        super().__init__(mensagem)
        self.minimo = minimo

    def contexto(self) -> Dict[str, Any]:
        return {"minimo_phi3": self.minimo}


class ConfigError(SuperficieMinimaError):
    """Erro de configuração com caminho de campo ou linha/coluna"""

    def __init__(self, mensagem: str, campo: Optional[str] = None,
                 linha: Optional[int] = None, coluna: Optional[int] = None):
        if campo:
            mensagem = f"{campo}: {mensagem}"
        elif linha is not None:
            mensagem = f"linha {linha}, coluna {coluna}: {mensagem}"
        super().__init__(mensagem)
        self.campo = campo
        self.linha = linha
        self.coluna = coluna

    def contexto(self) -> Dict[str, Any]:
        return {"campo": self.campo, "linha": self.linha, "coluna": self.coluna}


class ExportError(SuperficieMinimaError):
    def __init__(self, mensagem: str, no: Optional[int] = None):
        super().__init__(mensagem)
        self.no = no

    def contexto(self) -> Dict[str, Any]:
        return {"no": self.no}
