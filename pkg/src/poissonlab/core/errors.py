"""
例外階層（Error Hierarchy）

所有實驗室錯誤都繼承 PoissonLabError，診斷資料以屬性保存（不只在訊息字串裡），
讓 scenario runner 能記錄、CLI 能決定 exit code、測試能直接斷言欄位。
"""

from __future__ import annotations

from typing import Any, Sequence


class PoissonLabError(Exception):
    """poissonlab 所有錯誤的基底類別。"""


# =============================================================================
# exprcore
# =============================================================================

class ExpressionSyntaxError(PoissonLabError):
    """運算式語法錯誤（附 byte offset）。"""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnknownIdentifierError(PoissonLabError):
    """運算式中出現未宣告的座標/參數名稱。"""

    def __init__(self, name: str, offset: int):
        super().__init__(f"未知識別字 {name!r} (offset {offset})")
        self.name = name
        self.offset = offset


class DomainError(PoissonLabError):
    """部分函數在此點無定義（除以零、負數開偶次根等），不回傳 NaN。"""


class MissingParameterError(DomainError):
    """求值時缺少參數值。"""

    def __init__(self, name: str):
        super().__init__(f"缺少參數 {name!r} 的值")
        self.name = name


class NonDifferentiableError(PoissonLabError):
    """在不可微點要求一階導數（例如 cbrt 在 0）。"""


class ImplicitSolveError(DomainError):
    """隱函數求解失敗（找不到變號區間或不收斂）。"""


# =============================================================================
# poisson
# =============================================================================

class OutOfDomainError(DomainError):
    """點不在 chart 的 box 內（D8：不做 clamp）。"""

    def __init__(self, point: Sequence[float]):
        super().__init__(f"點 {tuple(float(v) for v in point)} 不在 chart 定義域內")
        self.point = tuple(float(v) for v in point)


class OddRankError(PoissonLabError):
    """Poisson 矩陣數值秩為奇數：代表秩容差設定失敗。"""

    def __init__(self, point: Sequence[float], rank: int, singular_values: Sequence[float]):
        super().__init__(f"在 {tuple(point)} 得到奇數秩 {rank}，奇異值 {list(singular_values)}")
        self.point = tuple(float(v) for v in point)
        self.rank = rank
        self.singular_values = tuple(float(v) for v in singular_values)


class NotInLeafError(PoissonLabError):
    """切向量不在 Im Π^♯ 內（殘差超過容差）。"""

    def __init__(self, residual: float, norm: float):
        super().__init__(f"向量不在葉的切空間內：殘差 {residual:.3e}（‖u‖ = {norm:.3e}）")
        self.residual = residual
        self.norm = norm


# =============================================================================
# flows
# =============================================================================

class LeftDomainError(OutOfDomainError):
    """軌跡離開定義域；partial 保存離開前的部分軌跡。"""

    def __init__(self, point: Sequence[float], partial: Any):
        super().__init__(point)
        self.partial = partial


# =============================================================================
# coiso
# =============================================================================

class ProjectionError(PoissonLabError):
    """Gauss–Newton 投影不收斂；residuals 為每次迭代的 ‖F‖_∞。"""

    def __init__(self, message: str, residuals: Sequence[float], partial: Any = None):
        super().__init__(message)
        self.residuals = tuple(float(r) for r in residuals)
        self.partial = partial


class RankDeficiencyError(PoissonLabError):
    """定義函數的 Jacobian 在此點不滿秩（level set 不正則）。"""


class IrregularSubmanifoldError(RankDeficiencyError):
    """建構時在探測點發現不正則的 level set。"""


class NotOnSubmanifoldError(PoissonLabError):
    """點不在子流形上（‖F‖_∞ 超過容差）。"""

    def __init__(self, point: Sequence[float], residual: float):
        super().__init__(f"點 {tuple(point)} 不在子流形上：‖F‖∞ = {residual:.3e}")
        self.point = tuple(float(v) for v in point)
        self.residual = residual


class NotVanishingError(PoissonLabError):
    """函數在子流形的探測點上不為零（或不是時間的函數）。"""

    def __init__(self, message: str, point: Sequence[float], value: float):
        super().__init__(message)
        self.point = tuple(float(v) for v in point)
        self.value = value


# =============================================================================
# clean
# =============================================================================

class NotCleanError(PoissonLabError):
    """要求 clean 點的運算收到非 clean 點。"""

    def __init__(self, point: Sequence[float], kind: str):
        super().__init__(f"點 {tuple(point)} 不是 clean 點（判定為 {kind}）")
        self.point = tuple(float(v) for v in point)
        self.kind = kind


class LeafAtlasError(PoissonLabError):
    """atlas 的不變量在探測 flow 上不守恆。"""

    def __init__(self, region: str, deviation: float):
        super().__init__(f"區域 {region!r} 的不變量在探測 flow 上偏移 {deviation:.3e}")
        self.region = region
        self.deviation = deviation


# =============================================================================
# c0lab
# =============================================================================

class MemberNotPoissonError(PoissonLabError):
    """族中某個成員不是 Poisson map。"""

    def __init__(self, index: float, point: Sequence[float], residual: float):
        super().__init__(
            f"成員 n={index:g} 在 {tuple(point)} 不是 Poisson map：殘差 {residual:.3e}"
        )
        self.index = index
        self.point = tuple(float(v) for v in point)
        self.residual = residual


class ImageOffTargetError(PoissonLabError):
    """特徵葉的像離開目標子流形。"""

    def __init__(self, point: Sequence[float], residual: float):
        super().__init__(f"像點 {tuple(point)} 不在目標子流形上：‖F‖∞ = {residual:.3e}")
        self.point = tuple(float(v) for v in point)
        self.residual = residual


class OffSubmanifoldError(PoissonLabError):
    """C0 特徵分割探測的樣本離開 C（前提不成立）。"""

    def __init__(self, point: Sequence[float], residual: float):
        super().__init__(f"樣本 {tuple(point)} 離開子流形：‖F‖∞ = {residual:.3e}")
        self.point = tuple(float(v) for v in point)
        self.residual = residual


# =============================================================================
# scenarios
# =============================================================================

class UnknownScenarioError(PoissonLabError):
    """找不到內建 scenario。"""

    def __init__(self, name: str, available: Sequence[str] = ()):
        hint = f"；可用：{', '.join(available)}" if available else ""
        super().__init__(f"未知 scenario {name!r}{hint}")
        self.name = name


class ScenarioParseError(PoissonLabError):
    """scenario 檔案格式錯誤（附行號）。"""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnresolvedReferenceError(ScenarioParseError):
    """scenario 中的名稱無法解析（座標、參數或 @參照）。"""

    def __init__(self, name: str, line: int):
        super().__init__(f"無法解析的參照 {name!r}", line)
        self.name = name
